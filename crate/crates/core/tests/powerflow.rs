mod common;

use mtdc_stab::case::bundled;
use mtdc_stab::powerflow::{solve_converged, solve_sequential};

#[test]
fn bundled_cases_balance() {
    for case in bundled::all() {
        let b = common::balance(&case);
        assert!(b.ac < 1e-8, "{:?}: AC {}", case.name, b.ac);
        assert!(b.dc < 1e-8, "{:?}: DC {}", case.name, b.dc);
        assert!(b.losses < 1e-8, "{:?}: losses {}", case.name, b.losses);
    }
}

#[test]
fn slack_converter_covers_schedule_and_losses() {
    let case = bundled::two_area_mtdc().to_system_base().unwrap();
    let pf = solve_converged(&case).unwrap();
    let slack = case.dc_slack_vsc().unwrap();
    let u_slack = pf.dc_voltages[case.dc_bus_index(case.vscs[slack].dc_bus).unwrap()];
    assert!((u_slack - case.vscs[slack].udc_set0).abs() < 1e-12);
    let total_ac: f64 = pf.vsc_p_s.iter().sum();
    let total_loss: f64 = pf.vsc_p_loss.iter().sum();
    // The DC side only loses power: the AC grid receives less than it gives.
    assert!(total_ac < 0.0 && -total_ac > total_loss);
    for (k, c) in case.vscs.iter().enumerate() {
        if k != slack {
            assert_eq!(pf.vsc_p_s[k], c.p_set0);
        }
        assert_eq!(pf.vsc_q_s[k], c.q_set0);
    }
}

#[test]
fn device_and_system_base_agree() {
    let case = bundled::two_area_mtdc();
    let a = solve_sequential(&case).unwrap();
    let b = solve_sequential(&case.to_system_base().unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overloaded_case_reports_non_convergence() {
    let mut case = bundled::smib();
    case.machines[0].p_set = 40.0;
    let r = solve_sequential(&case);
    assert!(r.map_or(true, |pf| !pf.converged));
    assert!(solve_converged(&case).is_err());
}

mod common;

use std::collections::HashMap;

use common::*;
use mtdc_stab::case::{build_ybus, bundled};
use mtdc_stab::dynamics::{bolted_fault, Topology};
use mtdc_stab::small_signal::analyze;
use mtdc_stab::time_domain::{
    apply_event, apply_fault, clear_fault, compute_cct, compute_cct_with, is_stable, loss_of_sync, simulate, Event,
    EventSchedule, FaultLocation, FaultSpec, SimOptions, Termination,
};
use mtdc_stab::{DynamicModel, Strategy};

fn model(strategy: Strategy, k: f64) -> DynamicModel {
    let case = two_area();
    DynamicModel::with_control(&case, &case.waf.with_strategy(strategy, Some(k), None)).unwrap()
}

#[test]
fn equilibrium_hold_every_case_and_strategy() {
    for case in bundled::all() {
        let m = DynamicModel::from_case(&case).unwrap();
        let res = simulate(&m, &EventSchedule::default(), &SimOptions::default()).unwrap();
        assert!(res.completed());
        assert!(res.max_channel_deviation() < 1e-8, "{:?}: {}", case.name, res.max_channel_deviation());
    }
    for s in [Strategy::Pwaf, Strategy::Qwaf, Strategy::Pqwaf] {
        let res = simulate(&model(s, 200.0), &EventSchedule::default(), &SimOptions { t_end: 5.0, ..Default::default() })
            .unwrap();
        assert!(res.max_channel_deviation() < 1e-8, "{s}: {}", res.max_channel_deviation());
    }
}

#[test]
fn trip_decay_matches_post_trip_mode() {
    let case = two_area();
    let mut post = case.clone();
    post.branches[8].status = false;
    let mut rates = Vec::new();
    for s in [Strategy::None, Strategy::Pwaf] {
        let waf = case.waf.with_strategy(s, Some(200.0), None);
        let m = DynamicModel::with_control(&case, &waf).unwrap();
        let res = simulate(&m, &trip_schedule(), &SimOptions { t_end: 20.0, ..Default::default() }).unwrap();
        assert!(res.completed());
        let y = area_angle_difference(&res, &m.machine_inertia());
        let (sigma, omega) = envelope_fit(&res.t, &y, 1.5);
        rates.push(sigma);
        if s == Strategy::None {
            // The swing after the trip follows the modes of the post-trip grid.
            let zeta = 100.0 * sigma / sigma.hypot(omega);
            let linear = analyze(&DynamicModel::with_control(&post, &waf).unwrap()).unwrap();
            let mode = linear.mode_a().unwrap();
            assert!(
                (zeta - mode.damping_pct).abs() < 0.15 * mode.damping_pct,
                "fitted {zeta:.3}% vs linear {:.3}%",
                mode.damping_pct
            );
        }
    }
    assert!(rates[1] >= 3.0 * rates[0], "{rates:?}");
}

#[test]
fn zero_sum_during_trip() {
    let res = simulate(&model(Strategy::Pwaf, 200.0), &trip_schedule(), &SimOptions::default()).unwrap();
    let sum = res.channel("waf.sum_dp").unwrap();
    let dp = res.channel("VSC1.dp").unwrap();
    assert!(dp.iter().any(|v| v.abs() > 1e-3), "controller never acted");
    assert!(sum.iter().all(|v| v.abs() < 1e-9));
}

/// Angle channels keyed by time; the post-event sample wins at event
/// instants.
fn angles_by_time(res: &mtdc_stab::time_domain::SimulationResult) -> HashMap<i64, Vec<f64>> {
    let mut out = HashMap::new();
    for (i, t) in res.t.iter().enumerate() {
        let v = (1..=4).map(|g| res.channel(&format!("G{g}.delta")).unwrap()[i]).collect();
        out.insert((t * 1e6).round() as i64, v);
    }
    out
}

#[test]
fn halving_the_step_barely_moves_angles() {
    let m = model(Strategy::Pwaf, 200.0);
    let coarse = simulate(&m, &trip_schedule(), &SimOptions::default()).unwrap();
    let fine = simulate(&m, &trip_schedule(), &SimOptions { dt: 0.0025, ..Default::default() }).unwrap();
    let (a, b) = (angles_by_time(&coarse), angles_by_time(&fine));
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (t, va) in &a {
        let vb = &b[t];
        for g in 0..4 {
            diff = diff.max((va[g] - vb[g]).abs());
            scale = scale.max(va[g].abs());
        }
    }
    assert!(diff < 0.005 * scale, "diff {diff}, scale {scale}");
}

#[test]
fn simulation_is_deterministic() {
    let m = model(Strategy::Pqwaf, 200.0);
    let f = tie_fault().schedule(0.08);
    let opts = SimOptions { t_end: 3.0, ..Default::default() };
    let a = simulate(&m, &f, &opts).unwrap();
    let b = simulate(&m, &f, &opts).unwrap();
    assert_eq!(a.t, b.t);
    assert_eq!(a.states, b.states);
}

#[test]
fn loss_of_sync_examples() {
    let h = [6.5, 6.5, 6.175, 6.175];
    assert!(!loss_of_sync(&[0.1, 0.05, -0.1, -0.2], &h, None));
    // Bounded +-60 degree swing around the centre of inertia.
    for i in 0..200 {
        let s = 60f64.to_radians() * (i as f64 * 0.1).sin();
        assert!(!loss_of_sync(&[s, s, -s, -s], &h, None));
    }
    assert!(loss_of_sync(&[4.0, 0.0, -3.0, 0.0], &h, None));
    assert!(!loss_of_sync(&[10.0], &[3.5], None));
    assert!(loss_of_sync(&[10.0], &[3.5], Some(0.0)));
}

#[test]
fn undersized_clearing_loses_synchronism() {
    let m = DynamicModel::from_case(&bundled::smib()).unwrap();
    let fault = FaultSpec::new(FaultLocation::Bus { bus: 1 }, vec![]);
    let res = simulate(&m, &fault.schedule(0.6), &SimOptions { t_end: 5.0, ..Default::default() }).unwrap();
    match res.termination {
        Termination::LossOfSync { t } => assert!(t < 5.0),
        other => panic!("{other:?}"),
    }
    // A short fault is survived and the swing stays bounded.
    let res = simulate(&m, &fault.schedule(0.05), &SimOptions { t_end: 5.0, ..Default::default() }).unwrap();
    assert!(res.completed());
}

#[test]
fn terminal_fault_blocks_transfer() {
    let m = DynamicModel::from_case(&bundled::smib()).unwrap();
    let fault = FaultSpec::new(FaultLocation::Bus { bus: 1 }, vec![]);
    let res = simulate(&m, &fault.schedule(0.1), &SimOptions { t_end: 0.3, ..Default::default() }).unwrap();
    let pe = res.channel("G1.pe").unwrap();
    let during: Vec<f64> = res
        .t
        .iter()
        .zip(pe)
        .filter(|(t, _)| **t > 0.1 && **t < 0.2)
        .map(|(_, p)| *p)
        .collect();
    assert!(!during.is_empty());
    assert!(during.iter().all(|p| p.abs() < 1e-3), "{during:?}");
}

#[test]
fn radial_stub_fault_gives_sentinel() {
    let m = DynamicModel::from_case(&bundled::smib()).unwrap();
    let fault = FaultSpec::new(FaultLocation::Bus { bus: 3 }, vec![]);
    let r = compute_cct(&m, &fault, 0.01).unwrap();
    assert!(r.at_least);
    assert!((r.cct - fault.t_max).abs() < 1e-12);
}

#[test]
fn cct_endpoints_hold_on_resimulation() {
    let m = model(Strategy::None, 0.0);
    let fault = tie_fault();
    let r = compute_cct_with(&m, &fault, 0.01, true).unwrap();
    assert!(r.verified && !r.at_least && r.pockets.is_empty());
    assert!(is_stable(&m, &fault, r.cct).unwrap());
    assert!(!is_stable(&m, &fault, r.cct + r.resolution).unwrap());
}

#[test]
fn fault_then_clear_without_trips_restores_topology() {
    let case = two_area();
    let t0 = Topology::of(&case);
    for at in [
        FaultLocation::Bus { bus: 9 },
        FaultLocation::BranchEnd { branch: 8, end: mtdc_stab::time_domain::BranchEnd::To },
    ] {
        let t1 = apply_fault(&case, t0.clone(), at, bolted_fault()).unwrap();
        assert_ne!(t1, t0);
        assert_eq!(clear_fault(&case, t1, at, &[]).unwrap(), t0);
    }
}

#[test]
fn two_circuit_clearing_removes_both_branches() {
    let mut case = two_area();
    let at = FaultLocation::Bus { bus: 9 };
    let t = apply_fault(&case, Topology::of(&case), at, bolted_fault()).unwrap();
    let t = clear_fault(&case, t, at, &[8, 9]).unwrap();
    for (b, s) in case.branches.iter_mut().zip(&t.branch_status) {
        b.status = *s;
    }
    let y = build_ybus(&case).unwrap();
    let (i8, i9) = (case.bus_index(8).unwrap(), case.bus_index(9).unwrap());
    assert_eq!(y[[i8, i9]].norm(), 0.0);
}

#[test]
fn invalid_targets_are_rejected() {
    let case = two_area();
    let topo = Topology::of(&case);
    assert!(apply_event(&case, topo.clone(), &Event::TripAcBranch { branch: 99 }).is_err());
    assert!(clear_fault(&case, topo.clone(), FaultLocation::Bus { bus: 9 }, &[]).is_err());
    assert!(apply_fault(&case, topo.clone(), FaultLocation::Bus { bus: 42 }, bolted_fault()).is_err());
    let twice = EventSchedule::default()
        .push(1.0, Event::TripAcBranch { branch: 8 })
        .push(2.0, Event::TripAcBranch { branch: 8 });
    assert!(twice.validate(&case).is_err());
    let backwards = EventSchedule::default()
        .push(2.0, Event::TripAcBranch { branch: 8 })
        .push(1.0, Event::TripAcBranch { branch: 9 });
    assert!(backwards.validate(&case).is_err());
    let m = DynamicModel::from_case(&case).unwrap();
    assert!(simulate(&m, &twice, &SimOptions::default()).is_err());
    assert!(simulate(&m, &EventSchedule::default(), &SimOptions { dt: 0.02, ..Default::default() }).is_err());
}

#[test]
fn schedule_json_round_trip() {
    let s = trip_schedule();
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(EventSchedule::from_json(&text).unwrap(), s);
    let f = tie_fault();
    assert_eq!(f.trips, vec![8]);
    assert_eq!(f.at, FaultLocation::Bus { bus: 9 });
}

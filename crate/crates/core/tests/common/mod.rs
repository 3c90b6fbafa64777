#![allow(dead_code)]

use mtdc_stab::case::bundled;
use mtdc_stab::time_domain::{EventSchedule, FaultSpec, SimulationResult};

pub fn trip_schedule() -> EventSchedule {
    EventSchedule::from_json(include_str!("../../cases/two_area_trip.json")).unwrap()
}

pub fn tie_fault() -> FaultSpec {
    FaultSpec::from_json(include_str!("../../cases/two_area_fault.json")).unwrap()
}

/// Inertia-weighted angle of area 1 (G1, G2) minus that of area 2 (G3, G4).
pub fn area_angle_difference(res: &SimulationResult, h: &[f64]) -> Vec<f64> {
    let d: Vec<&[f64]> = (1..=4).map(|g| res.channel(&format!("G{g}.delta")).unwrap()).collect();
    (0..res.t.len())
        .map(|i| {
            (h[0] * d[0][i] + h[1] * d[1][i]) / (h[0] + h[1]) - (h[2] * d[2][i] + h[3] * d[3][i]) / (h[2] + h[3])
        })
        .collect()
}

/// Decay rate (1/s) and angular frequency (rad/s) of an oscillation,
/// fitted to the half-cycle swings between successive extrema after `t0`.
/// Swings are used until one falls below 5% of the first, so residual
/// ripple from faster, smaller modes does not enter the fit.
pub fn envelope_fit(t: &[f64], y: &[f64], t0: f64) -> (f64, f64) {
    let mut ext = Vec::new();
    for i in 1..y.len() - 1 {
        if t[i] < t0 || t[i] == t[i - 1] {
            continue;
        }
        let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
        if (b > a && b >= c) || (b < a && b <= c) {
            ext.push((t[i], b));
        }
    }
    let mut swings: Vec<(f64, f64)> = Vec::new();
    let mut used = 1;
    for w in ext.windows(2) {
        let s = (w[1].1 - w[0].1).abs();
        if swings.first().is_some_and(|f: &(f64, f64)| s < 0.05 * f.1.exp()) {
            break;
        }
        swings.push((0.5 * (w[0].0 + w[1].0), s.ln()));
        used += 1;
    }
    let ext = &ext[..used];
    let n = swings.len() as f64;
    assert!(n >= 3.0, "too few extrema to fit an envelope");
    let mt = swings.iter().map(|s| s.0).sum::<f64>() / n;
    let ml = swings.iter().map(|s| s.1).sum::<f64>() / n;
    let slope = swings.iter().map(|s| (s.0 - mt) * (s.1 - ml)).sum::<f64>()
        / swings.iter().map(|s| (s.0 - mt).powi(2)).sum::<f64>();
    let half = (ext.last().unwrap().0 - ext[0].0) / (ext.len() - 1) as f64;
    (-slope, std::f64::consts::PI / half)
}

pub fn two_area() -> mtdc_stab::NetworkCase {
    bundled::two_area_mtdc()
}

/// Residuals of a power-flow solution checked from first principles:
/// worst AC bus mismatch, DC grid power balance against line dissipation,
/// and worst converter loss or energy-balance error.
pub struct Balance {
    pub ac: f64,
    pub dc: f64,
    pub losses: f64,
}

pub fn balance(case: &mtdc_stab::NetworkCase) -> Balance {
    use mtdc_stab::case::build_ybus;
    use mtdc_stab::powerflow::{losses, Direction, LossCoefficients};
    use num_complex::Complex64;

    let sys = case.to_system_base().unwrap();
    let pf = mtdc_stab::solve_sequential(&sys).unwrap();
    assert!(pf.converged);
    let y = build_ybus(&sys).unwrap();
    let v = &pf.ac_voltages;
    let n = v.len();
    let mut spec: Vec<Complex64> = sys.buses.iter().map(|b| -Complex64::new(b.p_load, b.q_load)).collect();
    for (g, m) in sys.machines.iter().enumerate() {
        spec[sys.bus_index(m.bus).unwrap()] += Complex64::new(pf.machine_p[g], pf.machine_q[g]);
    }
    for (k, c) in sys.vscs.iter().enumerate() {
        spec[sys.bus_index(c.ac_bus).unwrap()] += Complex64::new(pf.vsc_p_s[k], pf.vsc_q_s[k]);
    }
    // A slack bus without a machine is an infinite bus and absorbs anything.
    let infinite: Vec<bool> = (0..n)
        .map(|i| {
            sys.buses[i].kind == mtdc_stab::case::BusType::Slack
                && !sys.machines.iter().any(|m| sys.bus_index(m.bus).unwrap() == i)
        })
        .collect();
    let ac = (0..n)
        .filter(|&i| !infinite[i])
        .map(|i| {
            let inj: Complex64 = (0..n).map(|j| y[[i, j]] * v[j]).sum();
            (v[i] * inj.conj() - spec[i]).norm()
        })
        .fold(0.0, f64::max);

    let p_dc = pf.vsc_p_dc(&sys);
    let u = &pf.dc_voltages;
    let dissipated: f64 = sys
        .dc_lines
        .iter()
        .map(|l| {
            let (f, t) = (sys.dc_bus_index(l.from).unwrap(), sys.dc_bus_index(l.to).unwrap());
            (u[f] - u[t]).powi(2) / l.r_dc
        })
        .sum();
    let dc = (p_dc.iter().sum::<f64>() - dissipated).abs();

    let mut loss_err: f64 = 0.0;
    for (k, c) in sys.vscs.iter().enumerate() {
        let i_s = Complex64::new(pf.vsc_p_s[k], pf.vsc_q_s[k]).norm() / v[sys.bus_index(c.ac_bus).unwrap()].norm();
        let expected = losses(i_s, Direction::from_ac_injection(pf.vsc_p_s[k]), &LossCoefficients::of(c)).unwrap();
        loss_err = loss_err
            .max((pf.vsc_p_loss[k] - expected).abs())
            .max((p_dc[k] + pf.vsc_p_s[k] + pf.vsc_p_loss[k]).abs());
    }
    Balance { ac, dc, losses: loss_err }
}

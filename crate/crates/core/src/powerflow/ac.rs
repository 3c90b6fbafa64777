use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use num_complex::Complex64;

use crate::case::{build_ybus, BusType, NetworkCase};
use crate::error::Result;

/// Result of one Newton-Raphson AC power flow.
#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub v: Vec<Complex64>,
    /// Net complex power injected into the network at each bus.
    pub s_injected: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    pub mismatch_history: Vec<f64>,
}

/// Polar Newton-Raphson AC power flow.
///
/// `injections[i]` is an extra fixed `(P, Q)` injection at bus position `i`
/// (converter stations). PV buses take their active power from the machines
/// connected there; the slack bus balances the rest.
pub fn solve_ac(
    case: &NetworkCase,
    injections: &[(f64, f64)],
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[Complex64]>,
) -> Result<AcSolution> {
    let y = build_ybus(case)?;
    let n = case.buses.len();

    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    for (i, b) in case.buses.iter().enumerate() {
        p_spec[i] = -b.p_load + injections[i].0;
        q_spec[i] = -b.q_load + injections[i].1;
    }
    for m in &case.machines {
        let i = case.bus_index(m.bus)?;
        if case.buses[i].kind == BusType::Pv {
            p_spec[i] += m.p_set;
        }
    }

    let pvpq: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind != BusType::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusType::Pq).collect();

    let (mut vm, mut va): (Vec<f64>, Vec<f64>) = match warm_start {
        Some(v0) => (v0.iter().map(|v| v.norm()).collect(), v0.iter().map(|v| v.arg()).collect()),
        None => (vec![1.0; n], vec![0.0; n]),
    };
    for (i, b) in case.buses.iter().enumerate() {
        if b.kind != BusType::Pq {
            vm[i] = b.v_set;
        }
    }

    let voltages = |vm: &[f64], va: &[f64]| -> Array1<Complex64> {
        Array1::from_iter(vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)))
    };
    let mismatch = |v: &Array1<Complex64>| -> (Array1<f64>, Array1<Complex64>) {
        let i = y.dot(v);
        let s: Array1<Complex64> = Array1::from_iter(v.iter().zip(&i).map(|(v, i)| v * i.conj()));
        let f = Array1::from_iter(
            pvpq.iter()
                .map(|&k| p_spec[k] - s[k].re)
                .chain(pq.iter().map(|&k| q_spec[k] - s[k].im)),
        );
        (f, s)
    };
    let norm_inf = |f: &Array1<f64>| f.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut polished = false;
    let mut converged = false;
    loop {
        let v = voltages(&vm, &va);
        let (f, _) = mismatch(&v);
        let err = norm_inf(&f);
        history.push(err);
        if !err.is_finite() || err > 1e10 {
            break;
        }
        if err < tol {
            converged = true;
            // One extra Newton update tightens the fixed point well below
            // the tolerance; it is kept only if it actually improves.
            if polished || f.is_empty() {
                break;
            }
        }
        if iterations >= max_iter && !converged {
            break;
        }
        if converged {
            polished = true;
        } else {
            iterations += 1;
        }

        let jac = jacobian(&y, &v, &pvpq, &pq);
        let dx = match jac.solve_into(f) {
            Ok(dx) => dx,
            Err(_) => break,
        };
        let (vm_old, va_old) = (vm.clone(), va.clone());
        for (r, &k) in pvpq.iter().enumerate() {
            va[k] += dx[r];
        }
        for (r, &k) in pq.iter().enumerate() {
            vm[k] += dx[pvpq.len() + r];
        }
        if polished {
            let (f2, _) = mismatch(&voltages(&vm, &va));
            if norm_inf(&f2) > err {
                vm = vm_old;
                va = va_old;
                break;
            }
        }
    }

    let v = voltages(&vm, &va);
    let (f, s) = mismatch(&v);
    let max_mismatch = norm_inf(&f);
    Ok(AcSolution {
        v: v.to_vec(),
        s_injected: s.to_vec(),
        converged: converged && max_mismatch < tol,
        iterations,
        max_mismatch,
        mismatch_history: history,
    })
}

fn jacobian(y: &Array2<Complex64>, v: &Array1<Complex64>, pvpq: &[usize], pq: &[usize]) -> Array2<f64> {
    let n = v.len();
    let ibus = y.dot(v);
    let j = Complex64::i();
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
    // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    let mut ds_dva = Array2::<Complex64>::zeros((n, n));
    let mut ds_dvm = Array2::<Complex64>::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            let vn = v[c] / v[c].norm();
            let mut a = -y[[r, c]] * v[c];
            let mut m = v[r] * (y[[r, c]] * vn).conj();
            if r == c {
                a += ibus[r];
                m += ibus[r].conj() * vn;
            }
            ds_dva[[r, c]] = j * v[r] * a.conj();
            ds_dvm[[r, c]] = m;
        }
    }
    let (a, b) = (pvpq.len(), pq.len());
    let mut jac = Array2::zeros((a + b, a + b));
    for (r, &i) in pvpq.iter().enumerate() {
        for (c, &k) in pvpq.iter().enumerate() {
            jac[[r, c]] = ds_dva[[i, k]].re;
        }
        for (c, &k) in pq.iter().enumerate() {
            jac[[r, a + c]] = ds_dvm[[i, k]].re;
        }
    }
    for (r, &i) in pq.iter().enumerate() {
        for (c, &k) in pvpq.iter().enumerate() {
            jac[[a + r, c]] = ds_dva[[i, k]].im;
        }
        for (c, &k) in pq.iter().enumerate() {
            jac[[a + r, a + c]] = ds_dvm[[i, k]].im;
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{AcBranch, Bus, NetworkCase, PerUnit};

    fn two_bus(p_load: f64, x: f64) -> NetworkCase {
        NetworkCase {
            name: None,
            per_unit: PerUnit::System,
            system_base_mva: 100.0,
            f_base_hz: 50.0,
            buses: vec![
                Bus { id: 1, base_kv: 230.0, kind: BusType::Slack, v_set: 1.0, p_load: 0.0, q_load: 0.0 },
                Bus { id: 2, base_kv: 230.0, kind: BusType::Pq, v_set: 1.0, p_load, q_load: 0.0 },
            ],
            branches: vec![AcBranch { from: 1, to: 2, r: 0.0, x, b_shunt: 0.0, status: true }],
            machines: vec![],
            vscs: vec![],
            dc_buses: vec![],
            dc_lines: vec![],
            waf: Default::default(),
        }
    }

    /// Independent two-unknown Newton on the lossless two-bus equations
    /// P = V sin(-t)/x, Q = (V^2 - V cos t)/x at bus 2 with central
    /// finite-difference derivatives.
    fn oracle(p_load: f64, x: f64) -> (f64, f64) {
        let f = |t: f64, v: f64| -> [f64; 2] {
            [-p_load - v * t.sin() / x, -(v * v - v * t.cos()) / x]
        };
        let (mut t, mut v) = (0.0, 1.0);
        for _ in 0..100 {
            let r = f(t, v);
            let h = 1e-7;
            let (ft1, ft0) = (f(t + h, v), f(t - h, v));
            let (fv1, fv0) = (f(t, v + h), f(t, v - h));
            let j = [
                [(ft1[0] - ft0[0]) / (2.0 * h), (fv1[0] - fv0[0]) / (2.0 * h)],
                [(ft1[1] - ft0[1]) / (2.0 * h), (fv1[1] - fv0[1]) / (2.0 * h)],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            t -= (r[0] * j[1][1] - j[0][1] * r[1]) / det;
            v -= (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        }
        (t, v)
    }

    #[test]
    fn zero_injection_fixed_point() {
        let s = solve_ac(&two_bus(0.0, 0.5), &[(0.0, 0.0); 2], 1e-8, 30, None).unwrap();
        assert!(s.converged);
        for v in &s.v {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn loaded_two_bus_matches_oracle() {
        let s = solve_ac(&two_bus(0.5, 0.5), &[(0.0, 0.0); 2], 1e-8, 30, None).unwrap();
        assert!(s.converged);
        let (t, v) = oracle(0.5, 0.5);
        assert!((s.v[1].arg() - t).abs() < 1e-9, "{} vs {t}", s.v[1].arg());
        assert!((s.v[1].norm() - v).abs() < 1e-9);
        assert!(s.max_mismatch < 1e-8);
    }

    #[test]
    fn infeasible_loading_does_not_converge() {
        let s = solve_ac(&two_bus(10.0, 0.5), &[(0.0, 0.0); 2], 1e-8, 30, None).unwrap();
        assert!(!s.converged);
        assert!(!s.mismatch_history.is_empty());
    }

    #[test]
    fn fixed_injection_equals_negative_load() {
        let a = solve_ac(&two_bus(0.5, 0.5), &[(0.0, 0.0); 2], 1e-10, 30, None).unwrap();
        let b = solve_ac(&two_bus(0.0, 0.5), &[(0.0, 0.0), (-0.5, 0.0)], 1e-10, 30, None).unwrap();
        assert!((a.v[1] - b.v[1]).norm() < 1e-12);
    }
}

//! Steady-state initialization: sequential AC/DC power flow.
//!
//! The AC network is solved with the converters as fixed P/Q injections,
//! converter losses are evaluated from the AC-side current, the DC grid is
//! solved with the DC-slack converter holding its voltage, and the slack
//! converter's AC injection is updated from the DC result. The alternation
//! stops when the slack injection no longer moves.

mod ac;
mod dc;
mod losses;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::case::{BusType, NetworkCase, PerUnit};
use crate::error::{Error, Result};

pub use ac::{solve_ac, AcSolution};
pub use dc::{dc_conductance, solve_dc_grid, DcSolution};
pub use losses::{losses, Direction, LossCoefficients};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions {
    pub ac_tol: f64,
    pub ac_max_iter: usize,
    pub dc_tol: f64,
    pub dc_max_iter: usize,
    /// Stop when the slack converter injection changes less than this.
    pub outer_tol: f64,
    pub max_outer: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            ac_tol: 1e-8,
            ac_max_iter: 30,
            dc_tol: 1e-10,
            dc_max_iter: 30,
            outer_tol: 1e-8,
            max_outer: 50,
        }
    }
}

/// Converged AC/DC operating point. All quantities on the system base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Complex bus voltages as `[re, im]`, in case bus order.
    pub ac_voltages: Vec<Complex64>,
    pub dc_voltages: Vec<f64>,
    /// AC-side injections into the grid, per converter.
    pub vsc_p_s: Vec<f64>,
    pub vsc_q_s: Vec<f64>,
    pub vsc_p_loss: Vec<f64>,
    /// DC current injected into the DC grid, per converter.
    pub vsc_i_dc: Vec<f64>,
    /// Active and reactive output per machine.
    pub machine_p: Vec<f64>,
    pub machine_q: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    /// Power each converter injects into the DC grid.
    pub fn vsc_p_dc(&self, case: &NetworkCase) -> Vec<f64> {
        case.vscs
            .iter()
            .enumerate()
            .map(|(k, v)| self.vsc_i_dc[k] * self.dc_voltages[case.dc_bus_index(v.dc_bus).unwrap_or(0)])
            .collect()
    }
}

/// Sequential AC/DC power flow with default options.
pub fn solve_sequential(case: &NetworkCase) -> Result<PowerFlowSolution> {
    solve_sequential_with(case, &PowerFlowOptions::default())
}

pub fn solve_sequential_with(case: &NetworkCase, opts: &PowerFlowOptions) -> Result<PowerFlowSolution> {
    let case = if case.per_unit == PerUnit::System {
        std::borrow::Cow::Borrowed(case)
    } else {
        std::borrow::Cow::Owned(case.to_system_base()?)
    };
    case.ensure_valid()?;
    let case = case.as_ref();

    let nv = case.vscs.len();
    let mut p_s: Vec<f64> = case.vscs.iter().map(|v| v.p_set0).collect();
    let q_s: Vec<f64> = case.vscs.iter().map(|v| v.q_set0).collect();
    let slack = case.dc_slack_vsc();
    if let Some(s) = slack {
        // Lossless first guess.
        p_s[s] = -(0..nv).filter(|&k| k != s).map(|k| p_s[k]).sum::<f64>();
    }

    let vsc_bus: Vec<usize> = case
        .vscs
        .iter()
        .map(|v| case.bus_index(v.ac_bus))
        .collect::<Result<_>>()?;
    let vsc_dc_bus: Vec<usize> = case
        .vscs
        .iter()
        .map(|v| case.dc_bus_index(v.dc_bus))
        .collect::<Result<_>>()?;
    let coeffs: Vec<LossCoefficients<f64>> = case.vscs.iter().map(LossCoefficients::of).collect();

    let mut warm: Option<Vec<Complex64>> = None;
    let mut prev_delta = f64::INFINITY;
    let mut relax = 1.0;
    let mut outer = 0;
    let mut converged_outer = slack.is_none();

    let pass = |p_s: &[f64], warm: Option<&[Complex64]>| -> Result<Pass> {
        let mut inj = vec![(0.0, 0.0); case.buses.len()];
        for k in 0..nv {
            inj[vsc_bus[k]].0 += p_s[k];
            inj[vsc_bus[k]].1 += q_s[k];
        }
        let ac = solve_ac(case, &inj, opts.ac_tol, opts.ac_max_iter, warm)?;
        let mut loss = vec![0.0; nv];
        let mut p_dc_vsc = vec![0.0; nv];
        for k in 0..nv {
            let s = Complex64::new(p_s[k], q_s[k]);
            let i_s = s.norm() / ac.v[vsc_bus[k]].norm();
            loss[k] = coeffs[k].eval(i_s, Direction::from_ac_injection(p_s[k]));
            p_dc_vsc[k] = -(p_s[k] + loss[k]);
        }
        let dc = match slack {
            Some(s) => {
                let mut p_bus = vec![0.0; case.dc_buses.len()];
                for k in (0..nv).filter(|&k| k != s) {
                    p_bus[vsc_dc_bus[k]] += p_dc_vsc[k];
                }
                let sb = vsc_dc_bus[s];
                let dc = solve_dc_grid(case, &p_bus, sb, case.vscs[s].udc_set0, opts.dc_tol, opts.dc_max_iter)?;
                let others_at_slack: f64 = (0..nv)
                    .filter(|&k| k != s && vsc_dc_bus[k] == sb)
                    .map(|k| p_dc_vsc[k])
                    .sum();
                p_dc_vsc[s] = dc.p_slack - others_at_slack;
                Some(dc)
            }
            None => None,
        };
        Ok(Pass { ac, dc, loss, p_dc_vsc })
    };

    let mut last = pass(&p_s, None)?;
    while let Some(s) = slack {
        outer += 1;
        if !last.ac.converged {
            break;
        }
        if let Some(dc) = &last.dc {
            if !dc.converged {
                break;
            }
        }
        let target = -last.p_dc_vsc[s] - last.loss[s];
        let delta = target - p_s[s];
        if delta.abs() < opts.outer_tol {
            p_s[s] = target;
            converged_outer = true;
            last = pass(&p_s, warm.as_deref())?;
            break;
        }
        if outer >= opts.max_outer {
            break;
        }
        if delta.abs() > prev_delta.abs() {
            relax = 0.5;
        }
        prev_delta = delta;
        p_s[s] += relax * delta;
        warm = Some(last.ac.v.clone());
        last = pass(&p_s, warm.as_deref())?;
    }

    let ac = &last.ac;
    let (machine_p, machine_q) = machine_dispatch(case, ac, &p_s, &q_s)?;
    let dc_voltages = last.dc.as_ref().map(|d| d.u.clone()).unwrap_or_else(|| vec![1.0; case.dc_buses.len()]);
    let vsc_i_dc = (0..nv).map(|k| last.p_dc_vsc[k] / dc_voltages[vsc_dc_bus[k]]).collect();
    let dc_ok = last.dc.as_ref().map_or(true, |d| d.converged);
    Ok(PowerFlowSolution {
        ac_voltages: ac.v.clone(),
        dc_voltages,
        vsc_p_s: p_s,
        vsc_q_s: q_s,
        vsc_p_loss: last.loss.clone(),
        vsc_i_dc,
        machine_p,
        machine_q,
        converged: ac.converged && dc_ok && converged_outer,
        iterations: outer,
        max_mismatch: ac.max_mismatch,
    })
}

/// Like [`solve_sequential`] but fails on non-convergence.
pub fn solve_converged(case: &NetworkCase) -> Result<PowerFlowSolution> {
    let pf = solve_sequential(case)?;
    if !pf.converged {
        return Err(Error::PowerFlow(format!(
            "{} outer iterations, AC mismatch {:.3e}",
            pf.iterations, pf.max_mismatch
        )));
    }
    Ok(pf)
}

struct Pass {
    ac: AcSolution,
    dc: Option<DcSolution>,
    loss: Vec<f64>,
    p_dc_vsc: Vec<f64>,
}

/// Splits each bus's generation among its machines: P by schedule (slack
/// remainder by rating), Q by rating.
fn machine_dispatch(case: &NetworkCase, ac: &AcSolution, p_s: &[f64], q_s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = case.buses.len();
    let mut s_gen: Vec<Complex64> = (0..n)
        .map(|i| ac.s_injected[i] + Complex64::new(case.buses[i].p_load, case.buses[i].q_load))
        .collect();
    for (k, v) in case.vscs.iter().enumerate() {
        s_gen[case.bus_index(v.ac_bus)?] -= Complex64::new(p_s[k], q_s[k]);
    }

    let mut p = vec![0.0; case.machines.len()];
    let mut q = vec![0.0; case.machines.len()];
    for i in 0..n {
        let at: Vec<usize> = (0..case.machines.len())
            .filter(|&g| case.bus_index(case.machines[g].bus).ok() == Some(i))
            .collect();
        if at.is_empty() {
            continue;
        }
        let rating: f64 = at.iter().map(|&g| case.machines[g].rating_mva).sum();
        let scheduled: f64 = at.iter().map(|&g| case.machines[g].p_set).sum();
        for &g in &at {
            let share = case.machines[g].rating_mva / rating;
            q[g] = s_gen[i].im * share;
            p[g] = if case.buses[i].kind == BusType::Slack {
                s_gen[i].re * share
            } else {
                case.machines[g].p_set + (s_gen[i].re - scheduled) * share
            };
        }
    }
    Ok((p, q))
}

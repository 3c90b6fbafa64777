use ndarray::Array1;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::case::{NetworkCase, PerUnit};
use crate::control::Strategy;
use crate::dynamics::DynamicModel;
use crate::error::Result;
use crate::powerflow;

use super::{analyze, ModalAnalysis, Mode};

/// Minimum eigenvector correlation for a mode to count as the same mode
/// at the next gain.
pub const TRACK_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    /// Per-station gain.
    pub k_station: f64,
    /// Tracked modes in target order (mode A, mode B); `None` once the
    /// correlation drops below [`TRACK_THRESHOLD`].
    pub tracked: Vec<Option<Mode>>,
    /// Every electromechanical mode at this gain, by frequency.
    pub electromechanical: Vec<Mode>,
    pub max_real_part: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GainSweep {
    pub strategy: String,
    pub delay_ms: f64,
    pub points: Vec<SweepPoint>,
}

impl GainSweep {
    /// Damping (%) of tracked target `j` per point, `NaN` when untracked.
    pub fn damping(&self, j: usize) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.tracked.get(j).and_then(|m| m.as_ref()).map_or(f64::NAN, |m| m.damping_pct))
            .collect()
    }
}

/// Runs [`analyze`] for each per-station gain of `strategy`. Points are
/// computed in parallel and modes are tracked from the first gain by
/// eigenvector correlation over the machine angle and speed states.
pub fn gain_sweep(case: &NetworkCase, strategy: Strategy, gains: &[f64], delay_ms: f64) -> Result<GainSweep> {
    let sys = if case.per_unit == PerUnit::System {
        case.clone()
    } else {
        case.to_system_base()?
    };
    let pf = powerflow::solve_converged(&sys)?;
    let results: Vec<Result<(ModalAnalysis, Vec<usize>)>> = crate::parallel::install(|| {
        gains
            .par_iter()
            .map(|&k| {
                let waf = sys.waf.with_strategy(strategy, Some(k), Some(delay_ms));
                let model = DynamicModel::from_power_flow(&sys, pf.clone(), &waf)?;
                let mech = model
                    .layout()
                    .kinds
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| k.is_machine_mechanical())
                    .map(|(i, _)| i)
                    .collect();
                Ok((analyze(&model)?, mech))
            })
            .collect()
    });
    let results: Vec<(ModalAnalysis, Vec<usize>)> = results.into_iter().collect::<Result<_>>()?;

    let mut refs: Vec<Option<Array1<Complex64>>> = Vec::new();
    let mut points = Vec::with_capacity(gains.len());
    for (step, ((an, mech), &k)) in results.iter().zip(gains).enumerate() {
        let sub = |m: &Mode| -> Array1<Complex64> { mech.iter().map(|&i| an.right[[i, m.index]]).collect() };
        let mut tracked = Vec::new();
        if step == 0 {
            for m in an.electromechanical().into_iter().take(2) {
                refs.push(Some(sub(m)));
                tracked.push(Some(m.clone()));
            }
        } else {
            let mut taken = vec![false; an.modes.len()];
            for r in refs.iter_mut() {
                let Some(rv) = r.as_ref() else {
                    tracked.push(None);
                    continue;
                };
                let best = an
                    .modes
                    .iter()
                    .enumerate()
                    .filter(|(i, m)| !taken[*i] && m.eigenvalue.im > 0.0)
                    .map(|(i, m)| (i, correlation(rv, &sub(m))))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                match best {
                    Some((i, c)) if c >= TRACK_THRESHOLD => {
                        taken[i] = true;
                        *r = Some(sub(&an.modes[i]));
                        tracked.push(Some(an.modes[i].clone()));
                    }
                    _ => {
                        *r = None;
                        tracked.push(None);
                    }
                }
            }
        }
        points.push(SweepPoint {
            k_station: k,
            tracked,
            electromechanical: an.electromechanical().into_iter().cloned().collect(),
            max_real_part: an.max_real_part(1e-6),
        });
    }
    Ok(GainSweep {
        strategy: strategy.to_string(),
        delay_ms,
        points,
    })
}

/// `|a^H b| / (|a| |b|)`.
pub fn correlation(a: &Array1<Complex64>, b: &Array1<Complex64>) -> f64 {
    let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot.norm() / (na * nb)
    }
}

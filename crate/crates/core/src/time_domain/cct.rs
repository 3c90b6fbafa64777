use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicModel;
use crate::error::{Error, Result};

use super::events::{Event, EventSchedule, FaultLocation};
use super::simulate::{simulate, SimOptions};

fn default_t_fault() -> f64 {
    0.1
}
fn default_t_end() -> f64 {
    5.0
}
fn default_t_max() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    0.005
}

/// Fault scenario for clearing-time studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub at: FaultLocation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admittance: Option<Complex64>,
    /// Branches opened when the fault is cleared.
    #[serde(default)]
    pub trips: Vec<usize>,
    /// Fault inception time, s.
    #[serde(default = "default_t_fault")]
    pub t_fault: f64,
    /// End of each simulation, s.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Upper end of the clearing-time search, s.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl FaultSpec {
    pub fn new(at: FaultLocation, trips: Vec<usize>) -> Self {
        Self {
            at,
            admittance: None,
            trips,
            t_fault: default_t_fault(),
            t_end: default_t_end(),
            t_max: default_t_max(),
            dt: default_dt(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Event schedule for a fault lasting `duration` seconds.
    pub fn schedule(&self, duration: f64) -> EventSchedule {
        EventSchedule::default()
            .push(
                self.t_fault,
                Event::ApplyFault {
                    at: self.at,
                    admittance: self.admittance,
                },
            )
            .push(
                self.t_fault + duration,
                Event::ClearFault {
                    at: self.at,
                    trips: self.trips.clone(),
                },
            )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CctResult {
    /// Largest stable clearing time on the resolution grid, s.
    pub cct: f64,
    /// Stable even at `t_max`: `cct` is a lower bound.
    pub at_least: bool,
    pub resolution: f64,
    /// `stable(cct)` and `unstable(cct + resolution)` both simulated.
    pub verified: bool,
    pub simulations: usize,
    /// Clearing times whose verdict contradicts a single threshold.
    pub pockets: Vec<f64>,
}

/// Whether the system keeps synchronism when the fault lasts `duration`.
pub fn is_stable(model: &DynamicModel, fault: &FaultSpec, duration: f64) -> Result<bool> {
    let opts = SimOptions {
        t_end: fault.t_end.max(fault.t_fault + duration),
        dt: fault.dt,
        ..SimOptions::default()
    };
    Ok(simulate(model, &fault.schedule(duration), &opts)?.is_stable())
}

/// Critical clearing time by bisection on multiples of `resolution`.
pub fn compute_cct(model: &DynamicModel, fault: &FaultSpec, resolution: f64) -> Result<CctResult> {
    compute_cct_with(model, fault, resolution, false)
}

/// Like [`compute_cct`]; with `scan` every grid point up to the first
/// unstable time plus ten steps is simulated to look for stability pockets.
pub fn compute_cct_with(model: &DynamicModel, fault: &FaultSpec, resolution: f64, scan: bool) -> Result<CctResult> {
    if !(resolution >= fault.dt) {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution} must be at least the step {}",
            fault.dt
        )));
    }
    if !(fault.t_max > 0.0) {
        return Err(Error::InvalidInput("t_max must be positive".into()));
    }
    let n_max = (fault.t_max / resolution + 1e-9).floor() as usize;
    let mut verdicts: BTreeMap<usize, bool> = BTreeMap::new();
    let check = |n: usize, verdicts: &mut BTreeMap<usize, bool>| -> Result<bool> {
        if let Some(v) = verdicts.get(&n) {
            return Ok(*v);
        }
        let v = is_stable(model, fault, n as f64 * resolution)?;
        log::debug!("clearing time {:.4} s: {}", n as f64 * resolution, if v { "stable" } else { "unstable" });
        verdicts.insert(n, v);
        Ok(v)
    };

    if !check(0, &mut verdicts)? {
        return Err(Error::UnstableWithoutFault);
    }
    if check(n_max, &mut verdicts)? {
        return Ok(CctResult {
            cct: n_max as f64 * resolution,
            at_least: true,
            resolution,
            verified: true,
            simulations: verdicts.len(),
            pockets: Vec::new(),
        });
    }
    let (mut lo, mut hi) = (0usize, n_max);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if check(mid, &mut verdicts)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if scan {
        for n in 0..=(hi + 10).min(n_max) {
            check(n, &mut verdicts)?;
        }
    }
    let verified = verdicts.get(&lo) == Some(&true) && verdicts.get(&(lo + 1)) == Some(&false);
    let pockets: Vec<f64> = verdicts
        .iter()
        .filter(|(n, v)| (**n <= lo) != **v)
        .map(|(n, _)| *n as f64 * resolution)
        .collect();
    if !pockets.is_empty() {
        log::warn!("stability is not monotone in clearing time: {pockets:?}");
    }
    Ok(CctResult {
        cct: lo as f64 * resolution,
        at_least: false,
        resolution,
        verified,
        simulations: verdicts.len(),
        pockets,
    })
}

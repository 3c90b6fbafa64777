//! Linearization around the power-flow equilibrium and modal analysis.

mod linearize;
mod modes;
mod sweep;

pub use linearize::{jacobian, jacobian_of, linearize, EQUILIBRIUM_TOL};
pub use modes::{damping_ratio_pct, free_response, frequency_hz, modal_analysis, ModalAnalysis, Mode, EM_BAND_HZ, EM_SHARE};
pub use sweep::{correlation, gain_sweep, GainSweep, SweepPoint, TRACK_THRESHOLD};

use crate::dynamics::DynamicModel;
use crate::error::Result;

/// Linearizes `model` at its initial equilibrium and decomposes it.
pub fn analyze(model: &DynamicModel) -> Result<ModalAnalysis> {
    let a = linearize(model, &model.initial_state())?;
    modal_analysis(&a, model.layout())
}

//! Stability analysis of AC grids with embedded multi-terminal VSC-HVDC.
//!
//! Pipeline: [`case`] (data model) -> [`powerflow`] (sequential AC/DC
//! initialization) -> [`dynamics`] (electromechanical DAE model) ->
//! [`small_signal`] (linearization and modal analysis) and [`time_domain`]
//! (trapezoidal simulation, faults, critical clearing time). [`control`]
//! holds the WAF-based supplementary controllers.

pub mod case;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod parallel;
pub mod powerflow;
pub mod scalar;
pub mod small_signal;
pub mod time_domain;

pub use case::NetworkCase;
pub use control::{Strategy, WafConfig};
pub use dynamics::DynamicModel;
pub use error::{Error, Result};
pub use powerflow::{solve_sequential, PowerFlowSolution};
pub use scalar::Scalar;

/// Scalar used by the system-level solvers.
pub type Real = f64;
pub type Complex = num_complex::Complex64;

pub type ChannelStateF64 = control::ChannelState<f64>;
pub type ChannelStateF32 = control::ChannelState<f32>;
pub type PadeDelayF64 = control::PadeDelay<f64>;
pub type PadeDelayF32 = control::PadeDelay<f32>;
pub type StationParamsF64 = control::StationParams<f64>;
pub type StationParamsF32 = control::StationParams<f32>;
pub type LossCoefficientsF64 = powerflow::LossCoefficients<f64>;
pub type LossCoefficientsF32 = powerflow::LossCoefficients<f32>;

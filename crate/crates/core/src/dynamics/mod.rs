//! Electromechanical model: classical machines, converters with inner
//! current loops and a PLL, the DC grid and the supplementary controllers,
//! around an algebraic AC network.

mod dc_grid;
mod machine;
mod model;
mod network;
mod vsc;

pub use dc_grid::{dc_grid_rhs, DcBranch};
pub use machine::{governor_rhs, machine_rhs, SwingParams};
pub use model::{DynamicModel, Evaluation, Gates, LimiterFlags, StateKind, StateLayout, SystemState};
pub use network::{bolted_fault, Network, Topology};
pub use vsc::{current_limit, current_refs, vsc_rhs, VscSetpoints, MIN_VOLTAGE};

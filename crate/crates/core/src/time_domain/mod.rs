//! Nonlinear simulation with network events and critical clearing time.

mod cct;
mod events;
mod simulate;

pub use cct::{compute_cct, compute_cct_with, is_stable, CctResult, FaultSpec};
pub use events::{apply_event, apply_fault, clear_fault, BranchEnd, Event, EventSchedule, FaultLocation, TimedEvent};
pub use simulate::{loss_of_sync, simulate, simulate_from, Channel, SimOptions, SimulationResult, Termination};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::case::NetworkCase;
use crate::dynamics::{bolted_fault, Topology};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchEnd {
    From,
    To,
}

/// Where a fault is applied: an AC bus (by id) or one terminal of a
/// branch (by position in the case's branch list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaultLocation {
    Bus { bus: usize },
    BranchEnd { branch: usize, end: BranchEnd },
}

impl FaultLocation {
    /// Position of the faulted bus.
    pub fn bus_index(&self, case: &NetworkCase) -> Result<usize> {
        match *self {
            FaultLocation::Bus { bus } => case.bus_index(bus),
            FaultLocation::BranchEnd { branch, end } => {
                let b = case
                    .branches
                    .get(branch)
                    .ok_or(Error::UnknownId { kind: "AC branch", id: branch })?;
                case.bus_index(match end {
                    BranchEnd::From => b.from,
                    BranchEnd::To => b.to,
                })
            }
        }
    }
}

/// Network disturbance. Branches are referenced by their position in the
/// case's branch list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    TripAcBranch {
        branch: usize,
    },
    ApplyFault {
        at: FaultLocation,
        /// Shunt admittance `[re, im]` in system pu; bolted when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        admittance: Option<Complex64>,
    },
    ClearFault {
        at: FaultLocation,
        #[serde(default)]
        trips: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub t: f64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventSchedule {
    pub events: Vec<TimedEvent>,
}

impl EventSchedule {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn push(mut self, t: f64, event: Event) -> Self {
        self.events.push(TimedEvent { t, event });
        self
    }

    /// Checks ordering and targets by replaying the schedule on the
    /// case's topology.
    pub fn validate(&self, case: &NetworkCase) -> Result<()> {
        let mut topo = Topology::of(case);
        let mut last = f64::NEG_INFINITY;
        for ev in &self.events {
            if !(ev.t >= 0.0) || !ev.t.is_finite() {
                return Err(Error::InvalidInput(format!("event time {} is invalid", ev.t)));
            }
            if ev.t < last {
                return Err(Error::InvalidInput("event times must be nondecreasing".into()));
            }
            last = ev.t;
            topo = apply_event(case, topo, &ev.event)?;
        }
        Ok(())
    }
}

fn trip(case: &NetworkCase, topo: Topology, branch: usize) -> Result<Topology> {
    if branch >= case.branches.len() {
        return Err(Error::UnknownId { kind: "AC branch", id: branch });
    }
    if !topo.branch_status[branch] {
        return Err(Error::InvalidInput(format!("branch {branch} is already out of service")));
    }
    Ok(topo.with_branch_out(branch))
}

/// Adds a fault shunt at `at`.
pub fn apply_fault(case: &NetworkCase, topo: Topology, at: FaultLocation, y: Complex64) -> Result<Topology> {
    let bus = at.bus_index(case)?;
    if let FaultLocation::BranchEnd { branch, .. } = at {
        if !topo.branch_status[branch] {
            return Err(Error::InvalidInput(format!("fault on out-of-service branch {branch}")));
        }
    }
    if topo.faults.iter().any(|(b, _)| *b == bus) {
        return Err(Error::InvalidInput(format!("bus position {bus} is already faulted")));
    }
    Ok(topo.with_fault(bus, y))
}

/// Removes the fault shunt at `at` and opens the listed branches.
pub fn clear_fault(case: &NetworkCase, topo: Topology, at: FaultLocation, trips: &[usize]) -> Result<Topology> {
    let bus = at.bus_index(case)?;
    if !topo.faults.iter().any(|(b, _)| *b == bus) {
        return Err(Error::InvalidInput(format!("no fault to clear at bus position {bus}")));
    }
    let mut topo = topo.without_fault(bus);
    for &b in trips {
        topo = trip(case, topo, b)?;
    }
    Ok(topo)
}

pub fn apply_event(case: &NetworkCase, topo: Topology, event: &Event) -> Result<Topology> {
    match event {
        Event::TripAcBranch { branch } => trip(case, topo, *branch),
        Event::ApplyFault { at, admittance } => apply_fault(case, topo, *at, admittance.unwrap_or_else(bolted_fault)),
        Event::ClearFault { at, trips } => clear_fault(case, topo, *at, trips),
    }
}

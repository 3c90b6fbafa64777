//! Hybrid AC/DC case records, per-unit handling and network matrices.
//!
//! A [`NetworkCase`] is the static input document for every analysis. On
//! disk it is a single JSON object (see `docs/formats.md`). Device-level
//! quantities (machines, converters) are given on their own rating; DC grid
//! elements are given in physical units. [`NetworkCase::to_system_base`]
//! converts everything onto the system MVA base before any computation.

mod base;
pub mod bundled;
mod validate;
mod ybus;

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::control::WafConfig;
use crate::error::{Error, Result};

pub use validate::Violation;
pub use ybus::build_ybus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    Slack,
    #[serde(rename = "pv")]
    Pv,
    #[serde(rename = "pq")]
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub base_kv: f64,
    #[serde(rename = "type")]
    pub kind: BusType,
    #[serde(default = "one")]
    pub v_set: f64,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
}

/// Pi-model AC branch. Impedances are on the system base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcBranch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, split half per end.
    #[serde(default)]
    pub b_shunt: f64,
    #[serde(default = "yes")]
    pub status: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachineModel {
    #[default]
    Classical,
}

/// Speed-droop governor with a single first-order lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Governor {
    pub r: f64,
    pub t_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub bus: usize,
    pub rating_mva: f64,
    pub h: f64,
    #[serde(default)]
    pub d: f64,
    pub xd_prime: f64,
    #[serde(default)]
    pub model: MachineModel,
    /// Scheduled active power. Ignored for machines at the slack bus.
    #[serde(default)]
    pub p_set: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub governor: Option<Governor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VscMode {
    Droop,
    DcSlack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VscStation {
    pub id: usize,
    pub ac_bus: usize,
    pub dc_bus: usize,
    pub rating_mva: f64,
    pub r_s: f64,
    pub x_s: f64,
    pub tau_i: f64,
    pub p_max: f64,
    pub q_max: f64,
    pub i_max: f64,
    pub m_max: f64,
    pub loss_a: f64,
    pub loss_b: f64,
    pub loss_c_rec: f64,
    pub loss_c_inv: f64,
    pub k_dc: f64,
    pub mode: VscMode,
    #[serde(default)]
    pub p_set0: f64,
    #[serde(default)]
    pub q_set0: f64,
    #[serde(default = "one")]
    pub udc_set0: f64,
}

/// DC bus. `c_vsc` is the converter DC-link capacitance (uF on the device
/// basis, pu-seconds on the system basis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcBus {
    pub id: usize,
    pub c_vsc: f64,
    pub v_base_kv: f64,
}

/// DC line: `r_dc` in ohm, `l_dc` in mH, `c_cc` in uF on the device basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcLine {
    pub from: usize,
    pub to: usize,
    pub r_dc: f64,
    #[serde(default)]
    pub l_dc: f64,
    #[serde(default)]
    pub c_cc: f64,
}

/// Which base the numeric fields of a case are expressed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerUnit {
    #[default]
    Device,
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub per_unit: PerUnit,
    pub system_base_mva: f64,
    pub f_base_hz: f64,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<AcBranch>,
    #[serde(default)]
    pub machines: Vec<Machine>,
    #[serde(default)]
    pub vscs: Vec<VscStation>,
    #[serde(default)]
    pub dc_buses: Vec<DcBus>,
    #[serde(default)]
    pub dc_lines: Vec<DcLine>,
    #[serde(default)]
    pub waf: WafConfig,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl NetworkCase {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Position of the AC bus with `id`.
    pub fn bus_index(&self, id: usize) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| b.id == id)
            .ok_or(Error::UnknownId { kind: "AC bus", id })
    }

    pub fn dc_bus_index(&self, id: usize) -> Result<usize> {
        self.dc_buses
            .iter()
            .position(|b| b.id == id)
            .ok_or(Error::UnknownId { kind: "DC bus", id })
    }

    pub fn omega_base(&self) -> f64 {
        std::f64::consts::TAU * self.f_base_hz
    }

    /// Index of the DC-slack converter, if any.
    pub fn dc_slack_vsc(&self) -> Option<usize> {
        self.vscs.iter().position(|v| v.mode == VscMode::DcSlack)
    }

    /// Total equivalent capacitance of each DC bus: converter capacitance
    /// plus half the shunt capacitance of every incident line.
    pub fn dc_bus_capacitance(&self) -> Vec<f64> {
        self.dc_buses
            .iter()
            .map(|bus| {
                bus.c_vsc
                    + self
                        .dc_lines
                        .iter()
                        .filter(|l| l.from == bus.id || l.to == bus.id)
                        .map(|l| 0.5 * l.c_cc)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Returns the list of invariant violations; empty when the case is
    /// well formed.
    pub fn validate(&self) -> Vec<Violation> {
        validate::validate(self)
    }

    /// Fails with every violation message when the case is malformed.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v.iter().map(ToString::to_string).collect()))
        }
    }

    /// Expresses every quantity on `system_base_mva`. Idempotent.
    pub fn to_system_base(&self) -> Result<NetworkCase> {
        base::to_system_base(self)
    }
}

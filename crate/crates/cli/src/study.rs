//! Study definitions and the strategy/delay comparison report.

use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use mtdc_stab::case::bundled;
use mtdc_stab::small_signal::{analyze, gain_sweep, Mode};
use mtdc_stab::time_domain::{compute_cct_with, CctResult, EventSchedule, FaultSpec};
use mtdc_stab::{DynamicModel, NetworkCase, Strategy, WafConfig};

use crate::emit::{Cell, Table};

/// Reads a case from a file, falling back to the bundled case of that name.
pub fn load_case(arg: &str) -> Result<NetworkCase> {
    if Path::new(arg).exists() {
        return NetworkCase::load(arg).with_context(|| format!("cannot load case {arg}"));
    }
    bundled::by_name(arg).with_context(|| format!("no case file or bundled case named '{arg}'"))
}

fn scenario_text(arg: &str) -> Result<String> {
    if Path::new(arg).exists() {
        return std::fs::read_to_string(arg).with_context(|| format!("cannot read {arg}"));
    }
    bundled::scenario(arg)
        .map(str::to_string)
        .with_context(|| format!("no scenario file or bundled scenario named '{arg}'"))
}

pub fn load_events(arg: &str) -> Result<EventSchedule> {
    EventSchedule::from_json(&scenario_text(arg)?).with_context(|| format!("bad event file {arg}"))
}

pub fn load_fault(arg: &str) -> Result<FaultSpec> {
    FaultSpec::from_json(&scenario_text(arg)?).with_context(|| format!("bad fault file {arg}"))
}

/// One analysis setting: which case, which controller, which scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub case: String,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Per-station gain; the controller total is this times the station
    /// count. Ignored when the strategy is `none`.
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub delay_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<String>,
}

fn default_strategy() -> Strategy {
    Strategy::None
}

fn default_k() -> f64 {
    200.0
}

impl StudyConfig {
    pub fn new(case: &str, strategy: Strategy, k: f64, delay_ms: f64) -> Self {
        Self {
            case: case.to_string(),
            strategy,
            k,
            delay_ms,
            fault: None,
            events: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delay_ms >= 0.0 && self.delay_ms.is_finite()) {
            bail!("delay must be a non-negative number of milliseconds, got {}", self.delay_ms);
        }
        if self.strategy != Strategy::None && !(self.k >= 0.0 && self.k.is_finite()) {
            bail!("gain must be finite and non-negative, got {}", self.k);
        }
        Ok(())
    }

    /// Per-station gain actually applied.
    pub fn k_station(&self) -> f64 {
        if self.strategy == Strategy::None {
            0.0
        } else {
            self.k
        }
    }

    pub fn control(&self, case: &NetworkCase) -> WafConfig {
        case.waf.with_strategy(self.strategy, Some(self.k_station()), Some(self.delay_ms))
    }

    pub fn k_total(&self, case: &NetworkCase) -> f64 {
        self.control(case).kp_total
    }

    pub fn model(&self, case: &NetworkCase) -> Result<DynamicModel> {
        self.validate()?;
        Ok(DynamicModel::with_control(case, &self.control(case))?)
    }
}

/// Per-station gains from 0 to `k` inclusive, no wider apart than `step`.
pub fn gain_grid(k: f64, step: f64) -> Vec<f64> {
    if k <= 0.0 {
        return vec![0.0];
    }
    let n = (k / step.max(1e-9)).ceil().max(1.0) as usize;
    (0..=n).map(|i| k * i as f64 / n as f64).collect()
}

/// Inter-area targets A and B at the study's gain, followed from the
/// uncontrolled system by a gain sweep so the labels keep their meaning.
pub fn tracked_modes(case: &NetworkCase, study: &StudyConfig, k_step: f64) -> Result<[Option<Mode>; 2]> {
    study.validate()?;
    if study.strategy == Strategy::None {
        let an = analyze(&study.model(case)?)?;
        return Ok([an.mode_a().cloned(), an.mode_b().cloned()]);
    }
    let sweep = gain_sweep(case, study.strategy, &gain_grid(study.k, k_step), study.delay_ms)?;
    let last = sweep.points.last().context("empty gain sweep")?;
    Ok([0, 1].map(|j| last.tracked.get(j).cloned().flatten()))
}

/// The comparison matrix: each strategy at each delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub case: String,
    pub fault: String,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_delays")]
    pub delays: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Largest gain step while following the modes from k = 0.
    #[serde(default = "default_k_step")]
    pub k_step: f64,
}

fn all_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn default_delays() -> Vec<f64> {
    vec![0.0, 50.0, 100.0]
}

fn default_resolution() -> f64 {
    0.01
}

fn default_k_step() -> f64 {
    20.0
}

impl ReportConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Row settings. The uncontrolled system has no delay to vary, so it
    /// appears once.
    pub fn studies(&self) -> Vec<StudyConfig> {
        let mut out = Vec::new();
        for &s in &self.strategies {
            let delays: &[f64] = if s == Strategy::None { &[0.0] } else { &self.delays };
            for &d in delays {
                let mut st = StudyConfig::new(&self.case, s, self.k, d);
                st.fault = Some(self.fault.clone());
                out.push(st);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub zeta_pct: f64,
    pub freq_hz: f64,
}

impl From<&Mode> for ModeSummary {
    fn from(m: &Mode) -> Self {
        Self {
            zeta_pct: m.damping_pct,
            freq_hz: m.frequency_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub strategy: Strategy,
    pub delay_ms: Option<f64>,
    pub k: Option<f64>,
    pub mode_a: Option<ModeSummary>,
    pub mode_b: Option<ModeSummary>,
    pub cct: Option<CctResult>,
    /// `ok`, a note, or `failed: <reason>`.
    pub status: String,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.status.starts_with("failed")
    }
}

fn run_row(case: &NetworkCase, fault: &FaultSpec, cfg: &ReportConfig, study: &StudyConfig) -> Result<ReportRow> {
    let [a, b] = tracked_modes(case, study, cfg.k_step)?;
    let cct = compute_cct_with(&study.model(case)?, fault, cfg.resolution, false)?;
    let mut notes = Vec::new();
    if a.is_none() || b.is_none() {
        notes.push("mode untracked");
    }
    if cct.at_least {
        notes.push("cct at search limit");
    }
    if !cct.verified {
        notes.push("cct unverified");
    }
    let controlled = study.strategy != Strategy::None;
    Ok(ReportRow {
        strategy: study.strategy,
        delay_ms: controlled.then_some(study.delay_ms),
        k: controlled.then_some(study.k),
        mode_a: a.as_ref().map(Into::into),
        mode_b: b.as_ref().map(Into::into),
        cct: Some(cct),
        status: if notes.is_empty() { "ok".into() } else { notes.join("; ") },
    })
}

/// Runs modes and CCT for every row. A failing row is kept with a
/// `failed` status and the remaining rows still run.
pub fn run_report(cfg: &ReportConfig) -> Result<Vec<ReportRow>> {
    let case = load_case(&cfg.case)?;
    let fault = load_fault(&cfg.fault)?;
    if !(cfg.resolution > 0.0) {
        bail!("resolution must be positive, got {}", cfg.resolution);
    }
    let mut rows = Vec::new();
    for study in cfg.studies() {
        info!("report row: {} k={} delay={} ms", study.strategy, study.k, study.delay_ms);
        let row = run_row(&case, &fault, cfg, &study).unwrap_or_else(|e| {
            warn!("row {} at {} ms failed: {e:#}", study.strategy, study.delay_ms);
            ReportRow {
                strategy: study.strategy,
                delay_ms: (study.strategy != Strategy::None).then_some(study.delay_ms),
                k: (study.strategy != Strategy::None).then_some(study.k),
                mode_a: None,
                mode_b: None,
                cct: None,
                status: format!("failed: {e:#}"),
            }
        });
        rows.push(row);
    }
    Ok(rows)
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "strategy",
    "delay_ms",
    "k",
    "zeta_a_pct",
    "freq_a_hz",
    "zeta_b_pct",
    "freq_b_hz",
    "cct_ms",
    "cct_at_least",
    "status",
];

pub fn report_table(rows: &[ReportRow]) -> Table {
    let mut t = Table::new(&REPORT_COLUMNS);
    for r in rows {
        let mode = |m: &Option<ModeSummary>| -> [Cell; 2] {
            match m {
                Some(m) => [m.zeta_pct.into(), m.freq_hz.into()],
                None => [Cell::Empty, Cell::Empty],
            }
        };
        let [za, fa] = mode(&r.mode_a);
        let [zb, fb] = mode(&r.mode_b);
        t.push(vec![
            r.strategy.to_string().into(),
            r.delay_ms.into(),
            r.k.into(),
            za,
            fa,
            zb,
            fb,
            r.cct.as_ref().map(|c| 1e3 * c.cct).into(),
            r.cct.as_ref().map(|c| c.at_least.to_string()).into(),
            r.status.clone().into(),
        ]);
    }
    t
}

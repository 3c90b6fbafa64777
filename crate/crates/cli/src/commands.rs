//! Subcommands of the `mtdc-stab` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use mtdc_stab::small_signal::{analyze, gain_sweep};
use mtdc_stab::time_domain::{compute_cct_with, simulate, CctResult, EventSchedule, SimOptions, Termination};
use mtdc_stab::{solve_sequential, Strategy};

use crate::emit::{json_document, sig6, write_output, Format, Table};
use crate::study::{load_case, load_events, load_fault, report_table, run_report, ReportConfig, StudyConfig};

/// Exit status when the command ran but some result is an error row.
pub const EXIT_FAILED_ROWS: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mtdc-stab", version, about = "Stability studies of AC grids with multi-terminal VSC-HVDC")]
pub struct Cli {
    /// More log output on standard error (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sequential AC/DC power flow.
    Powerflow(PowerflowArgs),
    /// Eigenvalues, damping and participation at one operating point.
    Modes(ModesArgs),
    /// Tracked inter-area modes over a range of controller gains.
    Sweep(SweepArgs),
    /// Time-domain simulation of an event schedule.
    Simulate(SimulateArgs),
    /// Critical clearing time of a fault.
    Cct(CctArgs),
    /// Damping and CCT for each strategy and delay.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct PowerflowArgs {
    /// Case file or bundled case name.
    pub case: String,
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ControlArgs {
    /// Supplementary control: none, pwaf, qwaf or pqwaf.
    #[arg(long, default_value = "none")]
    pub strategy: Strategy,
    /// Per-station controller gain, pu.
    #[arg(long, default_value_t = 200.0)]
    pub k: f64,
    /// Communication delay of the WAF signal, ms.
    #[arg(long = "delay-ms", default_value_t = 0.0)]
    pub delay_ms: f64,
}

impl ControlArgs {
    fn study(&self, case: &str) -> StudyConfig {
        StudyConfig::new(case, self.strategy, self.k, self.delay_ms)
    }
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    pub case: String,
    #[command(flatten)]
    pub control: ControlArgs,
    /// Only electromechanical modes.
    #[arg(long)]
    pub em_only: bool,
    /// csv or json (default from the --out extension, else csv).
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub case: String,
    #[arg(long, default_value = "pwaf")]
    pub strategy: Strategy,
    /// First per-station gain.
    #[arg(long = "k-from", default_value_t = 0.0)]
    pub k_from: f64,
    /// Last per-station gain (inclusive).
    #[arg(long = "k-to", default_value_t = 500.0)]
    pub k_to: f64,
    #[arg(long = "k-step", default_value_t = 20.0)]
    pub k_step: f64,
    #[arg(long = "delay-ms", default_value_t = 0.0)]
    pub delay_ms: f64,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub case: String,
    /// Event schedule file or bundled scenario name (none: hold the
    /// equilibrium).
    #[arg(long)]
    pub events: Option<String>,
    /// End time, s.
    #[arg(long = "t-end", default_value_t = 20.0)]
    pub t_end: f64,
    /// Step size, s.
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[command(flatten)]
    pub control: ControlArgs,
    /// Keep integrating after loss of synchronism.
    #[arg(long)]
    pub no_stop: bool,
    /// Long-format CSV t,channel,value.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CctArgs {
    pub case: String,
    /// Fault file or bundled scenario name.
    #[arg(long)]
    pub fault: String,
    /// Bisection grid, s.
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    #[command(flatten)]
    pub control: ControlArgs,
    /// Simulate every grid point to look for stability pockets.
    #[arg(long)]
    pub scan: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Case file or bundled case name (overrides the config file).
    pub case: Option<String>,
    /// JSON file with the report matrix.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fault: Option<String>,
    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<Strategy>>,
    /// Comma-separated delays, ms.
    #[arg(long, value_delimiter = ',')]
    pub delays: Option<Vec<f64>>,
    /// Per-station gain of every controlled row.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Largest gain step when following the modes from k = 0.
    #[arg(long = "k-step")]
    pub k_step: Option<f64>,
    /// Table file, csv or json by extension. The text table always goes to
    /// standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command. Returns the process exit status.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Powerflow(a) => powerflow(a),
        Command::Modes(a) => modes(a),
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Cct(a) => cct(a),
        Command::Report(a) => report(a),
    }
}

fn powerflow(a: PowerflowArgs) -> Result<u8> {
    let case = load_case(&a.case)?;
    let pf = solve_sequential(&case)?;
    info!("power flow: {} iterations, mismatch {:.3e}", pf.iterations, pf.max_mismatch);
    write_output(a.out.as_deref(), &json_document(&pf)?)?;
    Ok(if pf.converged { 0 } else { EXIT_FAILED_ROWS })
}

pub const MODE_COLUMNS: [&str; 6] = ["mode_id", "re", "im", "zeta_pct", "freq_hz", "top3_participating_states"];
pub const SWEEP_COLUMNS: [&str; 6] = ["k", "mode_id", "re", "im", "zeta_pct", "freq_hz"];

const TARGETS: [&str; 2] = ["A", "B"];

fn modes(a: ModesArgs) -> Result<u8> {
    let case = load_case(&a.case)?;
    let model = a.control.study(&a.case).model(&case)?;
    let an = analyze(&model)?;
    let ids: Vec<Option<usize>> = vec![an.mode_a().map(|m| m.index), an.mode_b().map(|m| m.index)];
    let mut table = Table::new(&MODE_COLUMNS);
    let mut modes: Vec<_> = an
        .modes
        .iter()
        .filter(|m| m.eigenvalue.im >= 0.0 && (!a.em_only || m.electromechanical))
        .collect();
    modes.sort_by(|x, y| x.frequency_hz.total_cmp(&y.frequency_hz).then(x.eigenvalue.re.total_cmp(&y.eigenvalue.re)));
    for m in modes {
        let id = match ids.iter().position(|i| *i == Some(m.index)) {
            Some(j) => TARGETS[j].to_string(),
            None => m.index.to_string(),
        };
        let top = if m.defective {
            "defective".to_string()
        } else {
            m.dominant_states(model.layout(), 3)
                .iter()
                .map(|(s, p)| format!("{s}:{}", sig6(*p)))
                .collect::<Vec<_>>()
                .join(";")
        };
        table.push(vec![
            id.into(),
            m.eigenvalue.re.into(),
            m.eigenvalue.im.into(),
            m.damping_pct.into(),
            m.frequency_hz.into(),
            top.into(),
        ]);
    }
    let fmt = Format::resolve(a.format, a.out.as_deref(), Format::Csv);
    write_output(a.out.as_deref(), &table.encode(fmt)?)?;
    Ok(0)
}

fn sweep(a: SweepArgs) -> Result<u8> {
    if !(a.k_step > 0.0) || a.k_from < 0.0 || a.k_to < a.k_from {
        bail!("need 0 <= --k-from <= --k-to and --k-step > 0");
    }
    let case = load_case(&a.case)?;
    let n = ((a.k_to - a.k_from) / a.k_step + 1e-9).floor() as usize;
    let gains: Vec<f64> = (0..=n).map(|i| a.k_from + a.k_step * i as f64).collect();
    let sw = gain_sweep(&case, a.strategy, &gains, a.delay_ms)?;
    let mut table = Table::new(&SWEEP_COLUMNS);
    for p in &sw.points {
        for (j, m) in p.tracked.iter().enumerate() {
            match m {
                Some(m) => table.push(vec![
                    p.k_station.into(),
                    TARGETS[j].into(),
                    m.eigenvalue.re.into(),
                    m.eigenvalue.im.into(),
                    m.damping_pct.into(),
                    m.frequency_hz.into(),
                ]),
                None => warn!("mode {} untracked at k = {}", TARGETS[j], p.k_station),
            }
        }
    }
    let fmt = Format::resolve(a.format, a.out.as_deref(), Format::Csv);
    write_output(a.out.as_deref(), &table.encode(fmt)?)?;
    Ok(0)
}

fn write_long_csv(out: Option<&Path>, res: &mtdc_stab::time_domain::SimulationResult) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(sink));
    w.write_record(["t", "channel", "value"])?;
    for (i, t) in res.t.iter().enumerate() {
        let ts = sig6(*t);
        for c in &res.channels {
            w.write_record([ts.as_str(), c.name.as_str(), sig6(c.values[i]).as_str()])?;
        }
    }
    w.flush().context("cannot write simulation output")?;
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<u8> {
    let case = load_case(&a.case)?;
    let model = a.control.study(&a.case).model(&case)?;
    let schedule = match &a.events {
        Some(e) => load_events(e)?,
        None => EventSchedule::default(),
    };
    let opts = SimOptions {
        t_end: a.t_end,
        dt: a.dt,
        stop_on_loss_of_sync: !a.no_stop,
        ..Default::default()
    };
    let res = simulate(&model, &schedule, &opts)?;
    write_long_csv(a.out.as_deref(), &res)?;
    if res.modulation_warnings > 0 {
        warn!("modulation index above limit on {} steps", res.modulation_warnings);
    }
    match &res.termination {
        Termination::Completed => Ok(0),
        Termination::LossOfSync { t } => {
            warn!("loss of synchronism at t = {t:.4} s");
            Ok(0)
        }
        Termination::NumericalFailure { t, message } => {
            log::error!("numerical failure at t = {t:.4} s: {message}");
            Ok(EXIT_FAILED_ROWS)
        }
    }
}

#[derive(Serialize)]
struct CctReport<'a> {
    case: &'a str,
    fault: &'a str,
    strategy: Strategy,
    k: f64,
    delay_ms: f64,
    #[serde(flatten)]
    result: &'a CctResult,
}

fn cct(a: CctArgs) -> Result<u8> {
    let case = load_case(&a.case)?;
    let fault = load_fault(&a.fault)?;
    let study = a.control.study(&a.case);
    let model = study.model(&case)?;
    let r = compute_cct_with(&model, &fault, a.resolution, a.scan)?;
    if !r.pockets.is_empty() {
        warn!("stability pockets at {:?} s", r.pockets);
    }
    let doc = CctReport {
        case: &a.case,
        fault: &a.fault,
        strategy: study.strategy,
        k: study.k_station(),
        delay_ms: study.delay_ms,
        result: &r,
    };
    write_output(a.out.as_deref(), &json_document(&doc)?)?;
    Ok(0)
}

fn report(a: ReportArgs) -> Result<u8> {
    let mut cfg = match &a.config {
        Some(p) => ReportConfig::from_json(
            &std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
        )
        .with_context(|| format!("bad report config {}", p.display()))?,
        None => {
            let case = a.case.clone().context("report needs a case or --config")?;
            let fault = a.fault.clone().context("report needs --fault or --config")?;
            ReportConfig::from_json(&serde_json::json!({"case": case, "fault": fault}).to_string())?
        }
    };
    if let Some(c) = a.case {
        cfg.case = c;
    }
    if let Some(f) = a.fault {
        cfg.fault = f;
    }
    if let Some(s) = a.strategies {
        cfg.strategies = s;
    }
    if let Some(d) = a.delays {
        cfg.delays = d;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(r) = a.resolution {
        cfg.resolution = r;
    }
    if let Some(s) = a.k_step {
        cfg.k_step = s;
    }
    let rows = run_report(&cfg)?;
    let table = report_table(&rows);
    if let Some(out) = a.out.as_deref() {
        let fmt = Format::resolve(None, Some(out), Format::Csv);
        write_output(Some(out), &table.encode(fmt)?)?;
    }
    print!("{}", table.to_text());
    Ok(if rows.iter().any(|r| r.failed()) { EXIT_FAILED_ROWS } else { 0 })
}

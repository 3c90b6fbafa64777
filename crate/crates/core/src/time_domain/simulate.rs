use ndarray::{Array1, Array2, OwnedRepr};
use ndarray_linalg::{FactorizeInto, LUFactorized, Solve};
use serde::Serialize;

use crate::dynamics::{DynamicModel, Evaluation, Gates, Topology};
use crate::error::{Error, Result};
use crate::small_signal::jacobian_of;

use super::events::{apply_event, EventSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Stop at the first step that loses synchronism.
    pub stop_on_loss_of_sync: bool,
    /// Newton update tolerance per step (infinity norm).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 0.005,
            stop_on_loss_of_sync: true,
            tol: 1e-8,
            max_iter: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    LossOfSync { t: f64 },
    NumericalFailure { t: f64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

/// Trajectory on the (event-refined) time grid. Event instants appear
/// twice: before and after the switching.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    pub t: Vec<f64>,
    pub channels: Vec<Channel>,
    pub state_labels: Vec<String>,
    pub states: Vec<Vec<f64>>,
    pub termination: Termination,
    /// Samples at which some converter exceeded its modulation limit.
    pub modulation_warnings: usize,
}

impl SimulationResult {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Synchronism kept and no numerical failure.
    pub fn is_stable(&self) -> bool {
        self.completed()
    }

    /// Largest deviation of any channel from its initial value.
    pub fn max_channel_deviation(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.values.iter().map(move |v| (v - c.values[0]).abs()))
            .fold(0.0, f64::max)
    }
}

/// True when any machine angle is more than pi away from the reference:
/// the inertia-weighted centre of inertia, or `reference` (an infinite
/// bus angle) when given. Without a reference at least two machines are
/// needed.
pub fn loss_of_sync(delta: &[f64], h: &[f64], reference: Option<f64>) -> bool {
    let r = match reference {
        Some(r) => r,
        None if delta.len() >= 2 => {
            delta.iter().zip(h).map(|(d, h)| d * h).sum::<f64>() / h.iter().sum::<f64>()
        }
        None => return false,
    };
    delta.iter().any(|d| (d - r).abs() > std::f64::consts::PI)
}

struct Recorder {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
    t: Vec<f64>,
    states: Vec<Vec<f64>>,
    modulation_warnings: usize,
}

impl Recorder {
    fn new(model: &DynamicModel) -> Self {
        let case = model.case();
        let mut names = Vec::new();
        for g in 0..case.machines.len() {
            for q in ["delta", "delta_rel", "dw", "pe"] {
                names.push(format!("G{}.{q}", g + 1));
            }
        }
        for v in &case.vscs {
            for q in ["p", "q", "v", "dp", "dq", "dw_waf"] {
                names.push(format!("VSC{}.{q}", v.id));
            }
        }
        for d in &case.dc_buses {
            names.push(format!("DC{}.u", d.id));
        }
        names.push("waf.dw".into());
        names.push("waf.sum_dp".into());
        Self {
            values: vec![Vec::new(); names.len()],
            names,
            t: Vec::new(),
            states: Vec::new(),
            modulation_warnings: 0,
        }
    }

    fn push(&mut self, model: &DynamicModel, t: f64, x: &[f64], ev: &Evaluation) {
        let l = model.layout();
        let reference = reference_angle(model, x);
        let mut row = Vec::with_capacity(self.names.len());
        for g in 0..l.machine_delta.len() {
            let d = x[l.machine_delta[g]];
            row.extend([d, d - reference, x[l.machine_dw[g]], ev.machine_pe[g]]);
        }
        let scale = model.vsc_scale();
        let mut sum_dp = 0.0;
        for k in 0..ev.vsc_p.len() {
            let bus = model.case().bus_index(model.case().vscs[k].ac_bus).unwrap_or(0);
            row.extend([
                ev.vsc_p[k],
                ev.vsc_q[k],
                ev.voltages[bus].norm(),
                ev.dp[k],
                ev.dq[k],
                ev.omega_meas[k] - ev.omega_star,
            ]);
            sum_dp += scale[k] * ev.dp[k];
        }
        row.extend(l.dc_u.iter().map(|&i| x[i]));
        row.push(ev.omega_star - 1.0);
        row.push(sum_dp);
        for (c, v) in self.values.iter_mut().zip(row) {
            c.push(v);
        }
        self.t.push(t);
        self.states.push(x.to_vec());
        if ev.limits.modulation_exceeded.iter().any(|f| *f) {
            self.modulation_warnings += 1;
        }
    }

    fn finish(self, model: &DynamicModel, termination: Termination) -> SimulationResult {
        if self.modulation_warnings > 0 {
            log::warn!(
                "converter modulation limit exceeded at {} of {} samples",
                self.modulation_warnings,
                self.t.len()
            );
        }
        SimulationResult {
            t: self.t,
            channels: self
                .names
                .into_iter()
                .zip(self.values)
                .map(|(name, values)| Channel { name, values })
                .collect(),
            state_labels: model.layout().labels.clone(),
            states: self.states,
            termination,
            modulation_warnings: self.modulation_warnings,
        }
    }
}

fn reference_angle(model: &DynamicModel, x: &[f64]) -> f64 {
    if let Some(r) = model.infinite_bus_angle() {
        return r;
    }
    let l = model.layout();
    let h = model.machine_inertia();
    let total: f64 = h.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    l.machine_delta.iter().zip(&h).map(|(&i, h)| x[i] * h).sum::<f64>() / total
}

fn out_of_step(model: &DynamicModel, x: &[f64]) -> bool {
    let l = model.layout();
    let delta: Vec<f64> = l.machine_delta.iter().map(|&i| x[i]).collect();
    loss_of_sync(&delta, &model.machine_inertia(), model.infinite_bus_angle())
}

/// Chord-Newton solver for the trapezoidal step equations.
struct Stepper {
    gates: Option<Gates>,
    jac: Option<Array2<f64>>,
    lu: Option<(f64, LUFactorized<OwnedRepr<f64>>)>,
}

impl Stepper {
    fn reset(&mut self) {
        self.jac = None;
        self.lu = None;
    }

    fn rhs(&self, model: &DynamicModel, x: &[f64]) -> Result<Array1<f64>> {
        match &self.gates {
            Some(g) => model.rhs_gated(x, g),
            None => model.rhs(x),
        }
    }

    fn refresh(&mut self, model: &DynamicModel, x: &[f64]) -> Result<()> {
        self.jac = Some(jacobian_of(|y| self.rhs(model, y), x)?);
        self.lu = None;
        Ok(())
    }

    fn matrix(&mut self, h: f64) -> Result<&LUFactorized<OwnedRepr<f64>>> {
        let stale = !matches!(&self.lu, Some((hh, _)) if *hh == h);
        if stale {
            let j = self.jac.as_ref().expect("Jacobian computed before factorization");
            let n = j.nrows();
            let m = Array2::<f64>::eye(n) - j * (0.5 * h);
            self.lu = Some((h, m.factorize_into()?));
        }
        Ok(&self.lu.as_ref().unwrap().1)
    }

    /// Newton iterations from the explicit predictor; `fresh` refreshes the
    /// Jacobian at every iterate instead of reusing it.
    fn attempt(
        &mut self,
        model: &DynamicModel,
        x: &[f64],
        f0: &Array1<f64>,
        h: f64,
        opts: &SimOptions,
        fresh: bool,
    ) -> Result<Option<Vec<f64>>> {
        let n = x.len();
        let mut y: Vec<f64> = (0..n).map(|i| x[i] + h * f0[i]).collect();
        for _ in 0..opts.max_iter {
            if fresh {
                self.refresh(model, &y)?;
            }
            let fy = match self.rhs(model, &y) {
                Ok(f) => f,
                Err(_) => return Ok(None),
            };
            let g: Array1<f64> = (0..n).map(|i| -(y[i] - x[i] - 0.5 * h * (f0[i] + fy[i]))).collect();
            let d = self.matrix(h)?.solve(&g)?;
            let mut worst = 0.0f64;
            for i in 0..n {
                y[i] += d[i];
                worst = worst.max(d[i].abs());
            }
            if !worst.is_finite() {
                return Ok(None);
            }
            if worst < opts.tol {
                return Ok(Some(y));
            }
        }
        Ok(None)
    }

    /// One trapezoidal step of length `h`. Falls back from chord iteration
    /// to full Newton and then to halving the step.
    /// `ev` is the evaluation at `x`; its gates are held for the step.
    fn step(&mut self, model: &DynamicModel, x: &[f64], ev: &Evaluation, h: f64, opts: &SimOptions) -> Result<Vec<f64>> {
        if self.gates.as_ref() != Some(&ev.gates) {
            self.gates = Some(ev.gates.clone());
            self.jac = None;
            self.lu = None;
        }
        self.advance(model, x, &ev.dx, h, opts, 0)
    }

    fn advance(
        &mut self,
        model: &DynamicModel,
        x: &[f64],
        f0: &Array1<f64>,
        h: f64,
        opts: &SimOptions,
        depth: usize,
    ) -> Result<Vec<f64>> {
        if self.jac.is_some() {
            if let Some(y) = self.attempt(model, x, f0, h, opts, false)? {
                return Ok(y);
            }
        }
        self.refresh(model, x)?;
        if let Some(y) = self.attempt(model, x, f0, h, opts, false)? {
            return Ok(y);
        }
        if let Some(y) = self.attempt(model, x, f0, h, opts, true)? {
            return Ok(y);
        }
        if depth >= MAX_HALVINGS {
            return Err(Error::Numerical(format!(
                "step iteration did not converge to {:e} with step {h:e}",
                opts.tol
            )));
        }
        let mid = self.advance(model, x, f0, 0.5 * h, opts, depth + 1)?;
        let f_mid = self.rhs(model, &mid)?;
        self.advance(model, &mid, &f_mid, 0.5 * h, opts, depth + 1)
    }
}

const MAX_HALVINGS: usize = 6;

/// Simulates from the model's equilibrium.
pub fn simulate(model: &DynamicModel, schedule: &EventSchedule, opts: &SimOptions) -> Result<SimulationResult> {
    simulate_from(model, &model.initial_state(), schedule, opts)
}

/// Fixed-step trapezoidal simulation from state `x0`. Steps are shortened
/// to land on event times; events re-factorize the network.
///
/// Invalid schedules and options are errors; failures during stepping end
/// the run with [`Termination::NumericalFailure`] and keep the trajectory
/// up to the last good state.
pub fn simulate_from(
    base: &DynamicModel,
    x0: &Array1<f64>,
    schedule: &EventSchedule,
    opts: &SimOptions,
) -> Result<SimulationResult> {
    if !(opts.dt > 0.0) || opts.dt > 0.01 + 1e-15 {
        return Err(Error::InvalidInput(format!("dt must be in (0, 10 ms], got {}", opts.dt)));
    }
    if !(opts.t_end >= 0.0) || !opts.t_end.is_finite() {
        return Err(Error::InvalidInput(format!("t_end {} is invalid", opts.t_end)));
    }
    if x0.len() != base.n_states() {
        return Err(Error::InvalidInput("initial state has the wrong size".into()));
    }
    schedule.validate(base.case())?;

    let mut model = base.clone();
    let mut topo: Topology = model.topology().clone();
    let mut x = x0.to_vec();
    let mut rec = Recorder::new(&model);
    let mut stepper = Stepper { gates: None, jac: None, lu: None };
    let mut next_ev = 0;
    let mut t = 0.0;
    let mut lost_at = None;
    let eps = 1e-9 * opts.dt;

    let fail = |rec: Recorder, model: &DynamicModel, t: f64, e: Error| Ok(rec.finish(model, Termination::NumericalFailure { t, message: e.to_string() }));

    let mut ev = match model.evaluate(&x) {
        Ok(ev) => ev,
        Err(e) => return fail(rec, &model, t, e),
    };
    rec.push(&model, t, &x, &ev);

    loop {
        // Switching at the current instant.
        let mut switched = false;
        while next_ev < schedule.events.len() && schedule.events[next_ev].t <= t + eps {
            topo = apply_event(model.case(), topo, &schedule.events[next_ev].event)?;
            next_ev += 1;
            switched = true;
        }
        if switched {
            model = match model.with_topology(topo.clone()) {
                Ok(m) => m,
                Err(e) => return fail(rec, &model, t, e),
            };
            stepper.reset();
            ev = match model.evaluate(&x) {
                Ok(ev) => ev,
                Err(e) => return fail(rec, &model, t, e),
            };
            rec.push(&model, t, &x, &ev);
        }
        if t >= opts.t_end - eps {
            break;
        }

        let mut h = opts.dt.min(opts.t_end - t);
        if let Some(e) = schedule.events.get(next_ev) {
            if e.t < t + h - eps {
                h = e.t - t;
            }
        }
        let y = match stepper.step(&model, &x, &ev, h, opts) {
            Ok(y) => y,
            Err(e) => return fail(rec, &model, t, e),
        };
        ev = match model.evaluate(&y) {
            Ok(ev) => ev,
            Err(e) => return fail(rec, &model, t, e),
        };
        x = y;
        t = if (t + h - opts.t_end).abs() <= eps { opts.t_end } else { t + h };
        if let Some(e) = schedule.events.get(next_ev) {
            if (t - e.t).abs() <= eps {
                t = e.t;
            }
        }
        rec.push(&model, t, &x, &ev);
        if lost_at.is_none() && out_of_step(&model, &x) {
            lost_at = Some(t);
            if opts.stop_on_loss_of_sync {
                break;
            }
        }
    }
    let termination = match lost_at {
        Some(t) => Termination::LossOfSync { t },
        None => Termination::Completed,
    };
    Ok(rec.finish(&model, termination))
}

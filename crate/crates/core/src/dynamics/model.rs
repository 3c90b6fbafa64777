use std::sync::Arc;

use ndarray::Array1;
use num_complex::Complex64;

use crate::case::{BusType, NetworkCase, PerUnit};
use crate::control::{WafConfig, WafLaw};
use crate::error::{Error, Result};
use crate::powerflow::{self, Direction, LossCoefficients, PowerFlowSolution};
use crate::scalar::{clamp_sym, wrap_angle};

use super::dc_grid::{dc_grid_rhs, DcBranch};
use super::machine::{governor_rhs, machine_rhs, SwingParams};
use super::network::{Network, Topology};
use super::vsc::{current_limit, VscSetpoints, MIN_VOLTAGE};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// What a state variable represents; indices are element positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    MachineAngle(usize),
    MachineSpeed(usize),
    GovernorPower(usize),
    VscCurrentD(usize),
    VscCurrentQ(usize),
    VscPll(usize),
    DcVoltage(usize),
    DcLineCurrent(usize),
    ControlLowPass(usize),
    ControlWashout(usize),
    Delay(usize),
}

impl StateKind {
    pub fn is_machine_mechanical(self) -> bool {
        matches!(self, StateKind::MachineAngle(_) | StateKind::MachineSpeed(_))
    }
}

/// Positions of the state variables in the state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    pub machine_delta: Vec<usize>,
    pub machine_dw: Vec<usize>,
    pub machine_pm: Vec<Option<usize>>,
    pub vsc_id: Vec<usize>,
    pub vsc_iq: Vec<usize>,
    pub vsc_pll: Vec<usize>,
    pub dc_u: Vec<usize>,
    /// State index of each DC line current, `None` for resistive lines.
    pub dc_line: Vec<Option<usize>>,
    /// Controller filter states; empty when no strategy is enabled.
    pub ctrl_lp: Vec<usize>,
    pub ctrl_wo: Vec<usize>,
    pub delay: Option<(usize, usize)>,
    pub kinds: Vec<StateKind>,
    pub labels: Vec<String>,
}

impl StateLayout {
    fn build(case: &NetworkCase, controlled: bool, delayed: bool) -> Self {
        let mut kinds = Vec::new();
        let mut labels = Vec::new();
        let mut push = |k: StateKind, l: String| {
            kinds.push(k);
            labels.push(l);
            kinds.len() - 1
        };
        let mut machine_delta = Vec::new();
        let mut machine_dw = Vec::new();
        let mut machine_pm = Vec::new();
        for (g, m) in case.machines.iter().enumerate() {
            let name = format!("G{}", g + 1);
            machine_delta.push(push(StateKind::MachineAngle(g), format!("{name}.delta")));
            machine_dw.push(push(StateKind::MachineSpeed(g), format!("{name}.dw")));
            machine_pm.push(
                m.governor
                    .as_ref()
                    .map(|_| push(StateKind::GovernorPower(g), format!("{name}.pm"))),
            );
        }
        let (mut vsc_id, mut vsc_iq, mut vsc_pll) = (Vec::new(), Vec::new(), Vec::new());
        for (k, v) in case.vscs.iter().enumerate() {
            vsc_id.push(push(StateKind::VscCurrentD(k), format!("VSC{}.id", v.id)));
            vsc_iq.push(push(StateKind::VscCurrentQ(k), format!("VSC{}.iq", v.id)));
            vsc_pll.push(push(StateKind::VscPll(k), format!("VSC{}.pll", v.id)));
        }
        let dc_u = case
            .dc_buses
            .iter()
            .enumerate()
            .map(|(b, d)| push(StateKind::DcVoltage(b), format!("DC{}.u", d.id)))
            .collect();
        let dc_line = case
            .dc_lines
            .iter()
            .enumerate()
            .map(|(l, d)| {
                (d.l_dc > 0.0).then(|| push(StateKind::DcLineCurrent(l), format!("DC{}-{}.i", d.from, d.to)))
            })
            .collect();
        let (mut ctrl_lp, mut ctrl_wo) = (Vec::new(), Vec::new());
        if controlled {
            for (k, v) in case.vscs.iter().enumerate() {
                ctrl_lp.push(push(StateKind::ControlLowPass(k), format!("VSC{}.lowpass", v.id)));
                ctrl_wo.push(push(StateKind::ControlWashout(k), format!("VSC{}.washout", v.id)));
            }
        }
        let delay = (controlled && delayed).then(|| {
            (
                push(StateKind::Delay(0), "delay.x1".into()),
                push(StateKind::Delay(1), "delay.x2".into()),
            )
        });
        Self {
            machine_delta,
            machine_dw,
            machine_pm,
            vsc_id,
            vsc_iq,
            vsc_pll,
            dc_u,
            dc_line,
            ctrl_lp,
            ctrl_wo,
            delay,
            kinds,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}

/// Which nonlinearities are engaged at an operating point, per converter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimiterFlags {
    pub p_limit: Vec<bool>,
    pub q_limit: Vec<bool>,
    pub current_limit: Vec<bool>,
    pub dp_saturated: Vec<bool>,
    pub dq_saturated: Vec<bool>,
    /// Q modulation switched off by the voltage gate (only meaningful
    /// while Q modulation is enabled).
    pub q_gated: Vec<bool>,
    pub low_voltage: Vec<bool>,
    pub modulation_exceeded: Vec<bool>,
}

impl LimiterFlags {
    fn new(n: usize) -> Self {
        Self {
            p_limit: vec![false; n],
            q_limit: vec![false; n],
            current_limit: vec![false; n],
            dp_saturated: vec![false; n],
            dq_saturated: vec![false; n],
            q_gated: vec![false; n],
            low_voltage: vec![false; n],
            modulation_exceeded: vec![false; n],
        }
    }

    /// Descriptions of the engaged limiters that make the model
    /// non-smooth (modulation-index overruns are warnings only).
    pub fn active(&self) -> Vec<String> {
        let mut out = Vec::new();
        let groups: [(&str, &Vec<bool>); 7] = [
            ("P limit", &self.p_limit),
            ("Q limit", &self.q_limit),
            ("current limit", &self.current_limit),
            ("dP saturation", &self.dp_saturated),
            ("dQ saturation", &self.dq_saturated),
            ("Q voltage gate", &self.q_gated),
            ("low voltage", &self.low_voltage),
        ];
        for (name, flags) in groups {
            for (k, f) in flags.iter().enumerate() {
                if *f {
                    out.push(format!("{name} at converter {}", k + 1));
                }
            }
        }
        out
    }
}

/// Switching logic of the converters: the Q-modulation voltage gate and
/// the low-voltage freeze of the PLL and current references. The
/// simulator samples these once per step and holds them while solving the
/// implicit step, which keeps the step equations smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates {
    pub q_enabled: Vec<bool>,
    pub pll_active: Vec<bool>,
}

/// Everything computed by one model evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub dx: Array1<f64>,
    pub voltages: Vec<Complex64>,
    pub machine_pe: Vec<f64>,
    pub machine_pm: Vec<f64>,
    /// Converter AC-side injections (system pu).
    pub vsc_p: Vec<f64>,
    pub vsc_q: Vec<f64>,
    pub vsc_loss: Vec<f64>,
    /// Measured frequency per converter (pu).
    pub omega_meas: Vec<f64>,
    /// Delayed weighted-averaged frequency set point (pu).
    pub omega_star: f64,
    /// Supplementary commands (converter-rating pu).
    pub dp: Vec<f64>,
    pub dq: Vec<f64>,
    pub limits: LimiterFlags,
    /// Gate values used in this evaluation.
    pub gates: Gates,
}

#[derive(Debug, Clone)]
struct MachineData {
    bus: usize,
    x: f64,
    e_mag: f64,
    swing: SwingParams<f64>,
    pm0: f64,
    governor: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct VscData {
    bus: usize,
    dc: usize,
    p0: f64,
    q0: f64,
    udc0: f64,
    k_dc: f64,
    p_max: f64,
    q_max: f64,
    i_max: f64,
    tau: f64,
    z_s: Complex64,
    m_max: f64,
    scale: f64,
    loss: LossCoefficients<f64>,
}

/// Shared immutable data of a model family (all topologies).
#[derive(Debug)]
struct Core {
    case: NetworkCase,
    pf: PowerFlowSolution,
    machines: Vec<MachineData>,
    vscs: Vec<VscData>,
    dc_caps: Vec<f64>,
    dc_lines: Vec<DcBranch<f64>>,
    shunts: Vec<Complex64>,
    infinite: Vec<(usize, Complex64)>,
    omega_b: f64,
    t_meas: f64,
}

/// Electromechanical model of the AC/DC system for one control law and
/// one network topology. The AC network is algebraic; everything else is
/// an ODE in the state vector described by [`StateLayout`].
#[derive(Debug, Clone)]
pub struct DynamicModel {
    core: Arc<Core>,
    law: WafLaw<f64>,
    waf: WafConfig,
    layout: StateLayout,
    topology: Topology,
    network: Arc<Network>,
    x0: Array1<f64>,
}

/// Algebraic snapshot paired with a state vector.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub x: Array1<f64>,
    pub voltages: Vec<Complex64>,
}

impl DynamicModel {
    /// Builds the model around the power-flow solution of `case`, using
    /// the controller settings stored in the case.
    pub fn from_case(case: &NetworkCase) -> Result<Self> {
        Self::with_control(case, &case.waf)
    }

    /// Like [`DynamicModel::from_case`] with a different controller
    /// configuration.
    pub fn with_control(case: &NetworkCase, waf: &WafConfig) -> Result<Self> {
        let sys = if case.per_unit == PerUnit::System {
            case.clone()
        } else {
            case.to_system_base()?
        };
        let pf = powerflow::solve_converged(&sys)?;
        Self::from_power_flow(&sys, pf, waf)
    }

    /// Builds the model around a given operating point. `case` must be on
    /// the system base.
    pub fn from_power_flow(case: &NetworkCase, pf: PowerFlowSolution, waf: &WafConfig) -> Result<Self> {
        if case.per_unit != PerUnit::System {
            return Err(Error::InvalidInput("dynamic model needs a system-base case".into()));
        }
        let mut waf_sys = waf.clone();
        if waf_sys.alpha.len() != case.vscs.len() {
            if case.vscs.is_empty() {
                waf_sys.alpha.clear();
            } else {
                return Err(Error::InvalidInput(format!(
                    "{} weighting factors for {} converters",
                    waf_sys.alpha.len(),
                    case.vscs.len()
                )));
            }
        }
        let law = WafLaw::from_config(&waf_sys)?;
        let core = Arc::new(Core::build(case, pf, waf_sys.t_meas)?);
        let controlled = (law.enable_p || law.enable_q) && !case.vscs.is_empty();
        let layout = StateLayout::build(case, controlled, law.delay > 0.0);
        let topology = Topology::of(case);
        let network = Arc::new(Network::new(case, &topology, &core.shunts, core.infinite.clone())?);
        let mut model = Self {
            core,
            law,
            waf: waf_sys,
            layout,
            topology,
            network,
            x0: Array1::zeros(0),
        };
        model.initialize()?;
        Ok(model)
    }

    fn initialize(&mut self) -> Result<()> {
        let c = &self.core;
        let l = &self.layout;
        let mut x = Array1::zeros(l.len());
        for (g, m) in c.machines.iter().enumerate() {
            let v = c.pf.ac_voltages[m.bus];
            let i = (Complex64::new(c.pf.machine_p[g], c.pf.machine_q[g]) / v).conj();
            x[l.machine_delta[g]] = (v + J * m.x * i).arg();
        }
        for (b, &i) in l.dc_u.iter().enumerate() {
            x[i] = c.pf.dc_voltages[b];
        }
        for (li, line) in c.dc_lines.iter().enumerate() {
            if let Some(i) = l.dc_line[li] {
                x[i] = (x[l.dc_u[line.from]] - x[l.dc_u[line.to]]) / line.r;
            }
        }
        // Converter currents follow the network-solved voltages; a few
        // fixed-point passes settle the tiny power-flow residual.
        let mut v = c.pf.ac_voltages.clone();
        for _ in 0..4 {
            for (k, d) in c.vscs.iter().enumerate() {
                let vk = v[d.bus];
                x[l.vsc_id[k]] = d.p0 / vk.norm();
                x[l.vsc_iq[k]] = -d.q0 / vk.norm();
                x[l.vsc_pll[k]] = vk.arg();
            }
            v = self.network.solve(&self.injections(x.as_slice().unwrap()))?;
        }
        let pe = self.machine_pe(x.as_slice().unwrap(), &v);
        let core = Arc::get_mut(&mut self.core).expect("core is unshared during initialization");
        for (g, m) in core.machines.iter_mut().enumerate() {
            m.pm0 = pe[g];
        }
        for (g, pm) in self.layout.machine_pm.iter().enumerate() {
            if let Some(i) = pm {
                x[*i] = pe[g];
            }
        }
        self.x0 = x;
        Ok(())
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn n_states(&self) -> usize {
        self.layout.len()
    }

    /// The system-base case the model was built from.
    pub fn case(&self) -> &NetworkCase {
        &self.core.case
    }

    pub fn power_flow(&self) -> &PowerFlowSolution {
        &self.core.pf
    }

    pub fn control(&self) -> &WafConfig {
        &self.waf
    }

    pub fn law(&self) -> &WafLaw<f64> {
        &self.law
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn omega_base(&self) -> f64 {
        self.core.omega_b
    }

    /// Equilibrium state consistent with the power flow.
    pub fn initial_state(&self) -> Array1<f64> {
        self.x0.clone()
    }

    pub fn has_infinite_bus(&self) -> bool {
        !self.core.infinite.is_empty()
    }

    /// Angle of the first infinite bus, if any.
    pub fn infinite_bus_angle(&self) -> Option<f64> {
        self.core.infinite.first().map(|(_, v)| v.arg())
    }

    /// Inertia constants (system base) in machine order.
    pub fn machine_inertia(&self) -> Vec<f64> {
        self.core.machines.iter().map(|m| m.swing.h).collect()
    }

    /// Converter rating over system base, per converter.
    pub fn vsc_scale(&self) -> Vec<f64> {
        self.core.vscs.iter().map(|v| v.scale).collect()
    }

    /// Same model with another network topology. The LU factorization is
    /// rebuilt once here and reused by every evaluation.
    pub fn with_topology(&self, topology: Topology) -> Result<Self> {
        if topology.branch_status.len() != self.core.case.branches.len() {
            return Err(Error::InvalidInput("topology does not match the case".into()));
        }
        let network = Network::new(&self.core.case, &topology, &self.core.shunts, self.core.infinite.clone())?;
        Ok(Self {
            topology,
            network: Arc::new(network),
            ..self.clone()
        })
    }

    fn injections(&self, x: &[f64]) -> Vec<Complex64> {
        let c = &self.core;
        let l = &self.layout;
        let mut inj = vec![Complex64::new(0.0, 0.0); c.case.buses.len()];
        for (g, m) in c.machines.iter().enumerate() {
            inj[m.bus] += Complex64::from_polar(m.e_mag, x[l.machine_delta[g]]) / (J * m.x);
        }
        for (k, d) in c.vscs.iter().enumerate() {
            inj[d.bus] += Complex64::new(x[l.vsc_id[k]], x[l.vsc_iq[k]]) * Complex64::from_polar(1.0, x[l.vsc_pll[k]]);
        }
        inj
    }

    fn machine_pe(&self, x: &[f64], v: &[Complex64]) -> Vec<f64> {
        self.core
            .machines
            .iter()
            .enumerate()
            .map(|(g, m)| {
                let e = Complex64::from_polar(m.e_mag, x[self.layout.machine_delta[g]]);
                let i = (e - v[m.bus]) / (J * m.x);
                (e * i.conj()).re
            })
            .collect()
    }

    /// Bus voltages for state `x`.
    pub fn network_solve(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        self.network.solve(&self.injections(x))
    }

    pub fn state(&self, x: &Array1<f64>) -> Result<SystemState> {
        Ok(SystemState {
            x: x.clone(),
            voltages: self.network_solve(x.as_slice().unwrap())?,
        })
    }

    /// State derivatives.
    pub fn rhs(&self, x: &[f64]) -> Result<Array1<f64>> {
        Ok(self.evaluate(x)?.dx)
    }

    /// Derivatives with the gates held at `gates`.
    pub fn rhs_gated(&self, x: &[f64], gates: &Gates) -> Result<Array1<f64>> {
        Ok(self.evaluate_gated(x, Some(gates))?.dx)
    }

    /// Full evaluation: derivatives plus algebraic outputs.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.evaluate_gated(x, None)
    }

    /// Evaluation with the gates either taken from `gates` or decided by
    /// the voltages at `x`.
    pub fn evaluate_gated(&self, x: &[f64], gates: Option<&Gates>) -> Result<Evaluation> {
        let c = &self.core;
        let l = &self.layout;
        if x.len() != l.len() {
            return Err(Error::InvalidInput(format!("state has {} entries, model {}", x.len(), l.len())));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state {}", l.labels[i])));
        }
        let v = self.network_solve(x)?;
        let mut dx = Array1::zeros(l.len());
        let nv = c.vscs.len();

        let pe = self.machine_pe(x, &v);
        let mut pm = Vec::with_capacity(c.machines.len());
        for (g, m) in c.machines.iter().enumerate() {
            let dw = x[l.machine_dw[g]];
            let p_m = match (l.machine_pm[g], m.governor) {
                (Some(i), Some((r, t_g))) => {
                    dx[i] = governor_rhs(m.pm0, dw, x[i], r, t_g);
                    x[i]
                }
                _ => m.pm0,
            };
            let (dd, ddw) = machine_rhs(&m.swing, dw, p_m, pe[g]);
            dx[l.machine_delta[g]] = dd;
            dx[l.machine_dw[g]] = ddw;
            pm.push(p_m);
        }

        let mut limits = LimiterFlags::new(nv);
        let mut u_s = vec![0.0; nv];
        let mut dw_meas = vec![0.0; nv];
        let mut pll_active = vec![true; nv];
        for (k, d) in c.vscs.iter().enumerate() {
            let vk = v[d.bus];
            u_s[k] = vk.norm();
            pll_active[k] = gates.map_or(u_s[k] >= MIN_VOLTAGE, |g| g.pll_active[k]);
            if pll_active[k] && u_s[k] > 0.0 {
                let err = wrap_angle(vk.arg() - x[l.vsc_pll[k]]);
                dx[l.vsc_pll[k]] = err / c.t_meas;
                dw_meas[k] = err / (c.t_meas * c.omega_b);
            } else {
                limits.low_voltage[k] = true;
            }
        }

        // Broadcast set point: weighted average, optionally delayed.
        let wbar_dev: f64 = self.law.stations.iter().zip(&dw_meas).map(|(s, w)| s.alpha * w).sum();
        let star_dev = match l.delay {
            Some((i1, i2)) => {
                let tau = self.law.delay;
                dx[i1] = x[i2];
                dx[i2] = -12.0 / (tau * tau) * x[i1] - 6.0 / tau * x[i2] + wbar_dev;
                wbar_dev - 12.0 / tau * x[i2]
            }
            None => wbar_dev,
        };

        let q_enabled: Vec<bool> = match gates {
            Some(g) => g.q_enabled.clone(),
            None => self.law.stations.iter().zip(&u_s).map(|(st, u)| *u >= st.v_th).collect(),
        };
        let mut dp = vec![0.0; nv];
        let mut dq = vec![0.0; nv];
        if !l.ctrl_lp.is_empty() {
            for (k, st) in self.law.stations.iter().enumerate() {
                let (ilp, iwo) = (l.ctrl_lp[k], l.ctrl_wo[k]);
                let e = star_dev - dw_meas[k];
                dx[ilp] = (e - x[ilp]) / st.tf;
                dx[iwo] = (x[ilp] - x[iwo]) / st.tw;
                let y = x[ilp] - x[iwo];
                if self.law.enable_p {
                    dp[k] = st.p_command(y);
                    limits.dp_saturated[k] = (st.k_p * y).abs() >= st.dp_max;
                }
                if self.law.enable_q {
                    limits.q_gated[k] = !q_enabled[k];
                    if q_enabled[k] {
                        dq[k] = clamp_sym(-st.k_q * y, st.dq_max);
                        limits.dq_saturated[k] = (st.k_q * y).abs() >= st.dq_max;
                    }
                }
            }
        }

        let mut vsc_p = vec![0.0; nv];
        let mut vsc_q = vec![0.0; nv];
        let mut vsc_loss = vec![0.0; nv];
        let mut i_inj = vec![0.0; c.dc_caps.len()];
        for (k, d) in c.vscs.iter().enumerate() {
            let udc = x[l.dc_u[d.dc]];
            let p_raw = d.p0 + (udc - d.udc0) / d.k_dc + d.scale * dp[k];
            let q_raw = d.q0 + d.scale * dq[k];
            let sp = VscSetpoints {
                p_ref: clamp_sym(p_raw, d.p_max),
                q_ref: clamp_sym(q_raw, d.q_max),
            };
            limits.p_limit[k] = p_raw.abs() >= d.p_max;
            limits.q_limit[k] = q_raw.abs() >= d.q_max;
            let (id_ref, iq_ref) = if !pll_active[k] || u_s[k] <= 0.0 {
                (0.0, 0.0)
            } else {
                let (rd, rq) = (sp.p_ref / u_s[k], -sp.q_ref / u_s[k]);
                limits.current_limit[k] = rd.hypot(rq) >= d.i_max;
                current_limit(rd, rq, d.i_max)
            };
            let (id, iq) = (x[l.vsc_id[k]], x[l.vsc_iq[k]]);
            dx[l.vsc_id[k]] = (id_ref - id) / d.tau;
            dx[l.vsc_iq[k]] = (iq_ref - iq) / d.tau;

            let i = Complex64::new(id, iq) * Complex64::from_polar(1.0, x[l.vsc_pll[k]]);
            let s = v[d.bus] * i.conj();
            vsc_p[k] = s.re;
            vsc_q[k] = s.im;
            vsc_loss[k] = d.loss.eval(i.norm(), Direction::from_ac_injection(s.re));
            i_inj[d.dc] += -(s.re + vsc_loss[k]) / udc;
            let vc = v[d.bus] + d.z_s * i;
            limits.modulation_exceeded[k] = vc.norm() > d.m_max * udc;
        }

        let u: Vec<f64> = l.dc_u.iter().map(|&i| x[i]).collect();
        let line_i: Vec<f64> = l.dc_line.iter().flatten().map(|&i| x[i]).collect();
        let (du, di) = dc_grid_rhs(&c.dc_caps, &c.dc_lines, &u, &line_i, &i_inj)?;
        for (b, &i) in l.dc_u.iter().enumerate() {
            dx[i] = du[b];
        }
        for (&i, d) in l.dc_line.iter().flatten().zip(di) {
            dx[i] = d;
        }

        Ok(Evaluation {
            dx,
            voltages: v,
            machine_pe: pe,
            machine_pm: pm,
            vsc_p,
            vsc_q,
            vsc_loss,
            omega_meas: dw_meas.iter().map(|w| 1.0 + w).collect(),
            omega_star: 1.0 + star_dev,
            dp,
            dq,
            limits,
            gates: Gates { q_enabled, pll_active },
        })
    }
}

impl Core {
    fn build(case: &NetworkCase, pf: PowerFlowSolution, t_meas: f64) -> Result<Self> {
        if !pf.converged {
            return Err(Error::PowerFlow("operating point is not converged".into()));
        }
        if !(t_meas > 0.0) {
            return Err(Error::InvalidInput("t_meas must be positive".into()));
        }
        let omega_b = case.omega_base();
        let n = case.buses.len();
        let mut shunts = vec![Complex64::new(0.0, 0.0); n];
        for (i, b) in case.buses.iter().enumerate() {
            let vm2 = pf.ac_voltages[i].norm_sqr();
            shunts[i] += Complex64::new(b.p_load, -b.q_load) / vm2;
        }
        let mut machines = Vec::new();
        let mut has_machine = vec![false; n];
        for (g, m) in case.machines.iter().enumerate() {
            let bus = case.bus_index(m.bus)?;
            has_machine[bus] = true;
            shunts[bus] += 1.0 / (J * m.xd_prime);
            let v = pf.ac_voltages[bus];
            let i = (Complex64::new(pf.machine_p[g], pf.machine_q[g]) / v).conj();
            machines.push(MachineData {
                bus,
                x: m.xd_prime,
                e_mag: (v + J * m.xd_prime * i).norm(),
                swing: SwingParams {
                    h: m.h,
                    d: m.d,
                    omega_b,
                },
                pm0: pf.machine_p[g],
                governor: m.governor.as_ref().map(|gv| (gv.r, gv.t_g)),
            });
        }
        let mut infinite = Vec::new();
        for (i, b) in case.buses.iter().enumerate() {
            match b.kind {
                BusType::Slack if !has_machine[i] => infinite.push((i, pf.ac_voltages[i])),
                BusType::Pv if !has_machine[i] => {
                    return Err(Error::InvalidInput(format!(
                        "PV bus {} has no machine to hold its voltage",
                        b.id
                    )))
                }
                _ => {}
            }
        }
        let mut vscs = Vec::new();
        for (k, v) in case.vscs.iter().enumerate() {
            if !(v.k_dc > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "converter {} needs a positive DC droop constant for dynamic studies",
                    v.id
                )));
            }
            let dc = case.dc_bus_index(v.dc_bus)?;
            vscs.push(VscData {
                bus: case.bus_index(v.ac_bus)?,
                dc,
                p0: pf.vsc_p_s[k],
                q0: pf.vsc_q_s[k],
                udc0: pf.dc_voltages[dc],
                k_dc: v.k_dc,
                p_max: v.p_max,
                q_max: v.q_max,
                i_max: v.i_max,
                tau: v.tau_i,
                z_s: Complex64::new(v.r_s, v.x_s),
                m_max: v.m_max,
                scale: v.rating_mva / case.system_base_mva,
                loss: LossCoefficients::of(v),
            });
        }
        let dc_lines = case
            .dc_lines
            .iter()
            .map(|l| {
                Ok(DcBranch {
                    from: case.dc_bus_index(l.from)?,
                    to: case.dc_bus_index(l.to)?,
                    r: l.r_dc,
                    l: l.l_dc,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            case: case.clone(),
            dc_caps: case.dc_bus_capacitance(),
            pf,
            machines,
            vscs,
            dc_lines,
            shunts,
            infinite,
            omega_b,
            t_meas,
        })
    }
}

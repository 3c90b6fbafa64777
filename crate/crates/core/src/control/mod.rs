//! Wide-area supplementary controllers driven by the weighted-averaged
//! frequency (WAF) of the converter connection points.
//!
//! Every station compares its locally measured frequency with the common
//! set point `w* = sum(alpha_k * w_k)` and modulates its active power
//! (P-WAF), reactive power (Q-WAF) or both (PQ-WAF) through the chain
//! low-pass -> washout -> gain -> saturation. The broadcast set point may be
//! delayed by a second-order Pade approximation of `exp(-tau s)`.
//!
//! Blocks expose both a continuous form (used by the simulator and the
//! linearizer) and a trapezoidal discrete step (`*_step` functions) that
//! agrees with the simulator's integration rule.

mod blocks;
mod pade;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{clamp_sym, Scalar};

pub use blocks::{ChannelState, LowPass, Washout};
pub use pade::PadeDelay;

/// Case-file `waf` block. Gains and limits are on each converter's rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WafConfig {
    pub alpha: Vec<f64>,
    #[serde(rename = "kP_total")]
    pub kp_total: f64,
    #[serde(rename = "kQ_total")]
    pub kq_total: f64,
    #[serde(rename = "Tf")]
    pub tf: f64,
    #[serde(rename = "Tw")]
    pub tw: f64,
    pub dp_max: f64,
    pub dq_max: f64,
    pub v_th: f64,
    pub enable_p: bool,
    pub enable_q: bool,
    pub delay_ms: f64,
    /// Time constant of the frequency measurement (filtered angle
    /// derivative) at each connection point, in seconds.
    pub t_meas: f64,
}

impl Default for WafConfig {
    fn default() -> Self {
        Self {
            alpha: Vec::new(),
            kp_total: 0.0,
            kq_total: 0.0,
            tf: 0.1,
            tw: 10.0,
            dp_max: 1.0,
            dq_max: 1.0,
            v_th: 0.75,
            enable_p: false,
            enable_q: false,
            delay_ms: 0.0,
            t_meas: 0.02,
        }
    }
}

/// Supplementary control strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    None,
    Pwaf,
    Qwaf,
    Pqwaf,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::None, Strategy::Pwaf, Strategy::Qwaf, Strategy::Pqwaf];

    pub fn modulates_p(self) -> bool {
        matches!(self, Strategy::Pwaf | Strategy::Pqwaf)
    }

    pub fn modulates_q(self) -> bool {
        matches!(self, Strategy::Qwaf | Strategy::Pqwaf)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::None => "none",
            Strategy::Pwaf => "pwaf",
            Strategy::Qwaf => "qwaf",
            Strategy::Pqwaf => "pqwaf",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "none" | "base" => Ok(Strategy::None),
            "pwaf" => Ok(Strategy::Pwaf),
            "qwaf" => Ok(Strategy::Qwaf),
            "pqwaf" => Ok(Strategy::Pqwaf),
            other => Err(Error::InvalidInput(format!("unknown strategy '{other}'"))),
        }
    }
}

impl WafConfig {
    pub fn strategy(&self) -> Strategy {
        match (self.enable_p, self.enable_q) {
            (false, false) => Strategy::None,
            (true, false) => Strategy::Pwaf,
            (false, true) => Strategy::Qwaf,
            (true, true) => Strategy::Pqwaf,
        }
    }

    /// Copy with the given strategy. `k_station` is the per-station gain of
    /// the equal-weight design, so the total gain is `k_station * n`.
    pub fn with_strategy(&self, strategy: Strategy, k_station: Option<f64>, delay_ms: Option<f64>) -> Self {
        let mut out = self.clone();
        out.enable_p = strategy.modulates_p();
        out.enable_q = strategy.modulates_q();
        if let Some(k) = k_station {
            let n = self.alpha.len().max(1) as f64;
            out.kp_total = k * n;
            out.kq_total = k * n;
        }
        if let Some(d) = delay_ms {
            out.delay_ms = d;
        }
        out
    }

    pub fn delay_s(&self) -> f64 {
        self.delay_ms * 1e-3
    }

    /// Per-station parameters with gains distributed by the weights.
    pub fn stations(&self) -> Result<Vec<StationParams<f64>>> {
        let kp = distribute_gains(self.kp_total, &self.alpha)?;
        let kq = distribute_gains(self.kq_total, &self.alpha)?;
        Ok(self
            .alpha
            .iter()
            .enumerate()
            .map(|(i, &alpha)| StationParams {
                alpha,
                k_p: kp[i],
                k_q: kq[i],
                tf: self.tf,
                tw: self.tw,
                dp_max: self.dp_max,
                dq_max: self.dq_max,
                v_th: self.v_th,
            })
            .collect())
    }
}

/// Controller parameters of one station (converter-rating pu).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationParams<T> {
    pub alpha: T,
    pub k_p: T,
    pub k_q: T,
    pub tf: T,
    pub tw: T,
    pub dp_max: T,
    pub dq_max: T,
    pub v_th: T,
}

impl<T: Scalar> StationParams<T> {
    /// Active-power command for a washout output `y`: positive error
    /// (local frequency below the WAF) raises the injection.
    pub fn p_command(&self, washout_out: T) -> T {
        clamp_sym(self.k_p * washout_out, self.dp_max)
    }

    /// Reactive-power command: opposite sign to P, gated off while the
    /// connection-point voltage is below `v_th`.
    pub fn q_command(&self, washout_out: T, u_s: T) -> T {
        if u_s >= self.v_th {
            clamp_sym(-self.k_q * washout_out, self.dq_max)
        } else {
            T::zero()
        }
    }
}

/// Weighted-averaged frequency `sum(alpha_k * w_k)`.
pub fn waf<T: Scalar>(frequencies: &[T], alpha: &[T]) -> T {
    frequencies
        .iter()
        .zip(alpha)
        .fold(T::zero(), |acc, (&w, &a)| acc + a * w)
}

/// Splits a total gain proportionally to the weighting factors.
pub fn distribute_gains<T: Scalar>(k_total: T, alpha: &[T]) -> Result<Vec<T>> {
    if k_total < T::zero() || !k_total.is_finite() {
        return Err(Error::InvalidInput(format!(
            "total gain must be finite and non-negative, got {k_total}"
        )));
    }
    Ok(alpha.iter().map(|&a| a * k_total).collect())
}

/// One trapezoidal step of the P-WAF chain. Returns the active-power
/// command and the advanced channel state.
pub fn pwaf_step<T: Scalar>(
    state: &ChannelState<T>,
    omega_k: T,
    omega_star: T,
    params: &StationParams<T>,
    dt: T,
) -> (T, ChannelState<T>) {
    let next = state.step(omega_star - omega_k, params.tf, params.tw, dt);
    (params.p_command(next.output()), next)
}

/// One trapezoidal step of the Q-WAF chain at connection voltage `u_s`.
pub fn qwaf_step<T: Scalar>(
    state: &ChannelState<T>,
    omega_k: T,
    omega_star: T,
    u_s: T,
    params: &StationParams<T>,
    dt: T,
) -> (T, ChannelState<T>) {
    let next = state.step(omega_star - omega_k, params.tf, params.tw, dt);
    (params.q_command(next.output(), u_s), next)
}

/// Controller law of a whole converter set.
#[derive(Debug, Clone, PartialEq)]
pub struct WafLaw<T> {
    pub stations: Vec<StationParams<T>>,
    pub enable_p: bool,
    pub enable_q: bool,
    /// Communication delay of the broadcast set point in seconds.
    pub delay: T,
}

impl WafLaw<f64> {
    pub fn from_config(cfg: &WafConfig) -> Result<Self> {
        Ok(Self {
            stations: cfg.stations()?,
            enable_p: cfg.enable_p,
            enable_q: cfg.enable_q,
            delay: cfg.delay_s(),
        })
    }
}

/// Discrete state of [`WafLaw`]: one filter chain per station and a
/// shared delay line for the broadcast set point.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplementaryState<T> {
    pub channels: Vec<ChannelState<T>>,
    pub delay: PadeDelay<T>,
}

impl<T: Scalar> SupplementaryState<T> {
    pub fn new(law: &WafLaw<T>) -> Self {
        Self {
            channels: vec![ChannelState::default(); law.stations.len()],
            delay: PadeDelay::new(law.delay),
        }
    }
}

/// Per-station supplementary commands `(dp, dq)` for one step.
pub fn supplementary_outputs<T: Scalar>(
    state: &SupplementaryState<T>,
    omegas: &[T],
    u_s: &[T],
    law: &WafLaw<T>,
    dt: T,
) -> (Vec<(T, T)>, SupplementaryState<T>) {
    let alpha: Vec<T> = law.stations.iter().map(|s| s.alpha).collect();
    // The delay line carries the deviation from 1 pu so that a zero state
    // is the steady state of nominal frequency.
    let wbar = waf(omegas, &alpha) - T::one();
    let (delayed, delay) = state.delay.step(wbar, dt);
    let omega_star = T::one() + delayed;

    let mut out = Vec::with_capacity(law.stations.len());
    let mut channels = Vec::with_capacity(law.stations.len());
    for (i, p) in law.stations.iter().enumerate() {
        let next = state.channels[i].step(omega_star - omegas[i], p.tf, p.tw, dt);
        let y = next.output();
        let dp = if law.enable_p { p.p_command(y) } else { T::zero() };
        let dq = if law.enable_q { p.q_command(y, u_s[i]) } else { T::zero() };
        out.push((dp, dq));
        channels.push(next);
    }
    (out, SupplementaryState { channels, delay })
}

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, OperationNorm};
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{StateKind, StateLayout};
use crate::error::Result;

/// Frequency band of electromechanical modes, Hz.
pub const EM_BAND_HZ: (f64, f64) = (0.1, 3.0);
/// Share of participation the machine angle and speed states must carry
/// for a mode to count as electromechanical.
pub const EM_SHARE: f64 = 0.5;

/// Damping ratio in percent, `-sigma / |lambda| * 100`.
pub fn damping_ratio_pct(lambda: Complex64) -> f64 {
    let m = lambda.norm();
    if m == 0.0 {
        0.0
    } else {
        -lambda.re / m * 100.0
    }
}

/// Oscillation frequency in Hz, `omega / (2 pi)`.
pub fn frequency_hz(lambda: Complex64) -> f64 {
    lambda.im.abs() / std::f64::consts::TAU
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    /// Position in the eigenvalue list of the analysis.
    pub index: usize,
    pub eigenvalue: Complex64,
    pub damping_pct: f64,
    pub frequency_hz: f64,
    /// Participation factors per state, normalized to a maximum of 1.
    pub participation: Vec<f64>,
    /// Fraction of the participation carried by machine angle and speed.
    pub machine_share: f64,
    pub electromechanical: bool,
    /// Repeated or clustered eigenvalue: the eigenbasis is unreliable
    /// here and `participation` is left empty.
    pub defective: bool,
    /// Machine speed components of the right eigenvector, scaled so the
    /// largest has unit magnitude.
    pub shape: Vec<Complex64>,
}

impl Mode {
    /// The `n` states with the largest participation.
    pub fn dominant_states<'a>(&self, layout: &'a StateLayout, n: usize) -> Vec<(&'a str, f64)> {
        let mut idx: Vec<usize> = (0..self.participation.len()).collect();
        idx.sort_by(|a, b| self.participation[*b].total_cmp(&self.participation[*a]));
        idx.into_iter()
            .take(n)
            .map(|i| (layout.labels[i].as_str(), self.participation[i]))
            .collect()
    }
}

/// Eigen-decomposition of a state matrix with per-mode diagnostics.
#[derive(Debug, Clone)]
pub struct ModalAnalysis {
    pub eigenvalues: Array1<Complex64>,
    pub right: Array2<Complex64>,
    pub left: Array2<Complex64>,
    /// One entry per real eigenvalue or complex pair (the member with
    /// positive imaginary part).
    pub modes: Vec<Mode>,
    /// One-norm condition number of the right eigenvector matrix; large
    /// values flag a nearly defective state matrix.
    pub condition: f64,
}

impl ModalAnalysis {
    /// Electromechanical modes in increasing frequency.
    pub fn electromechanical(&self) -> Vec<&Mode> {
        let mut v: Vec<&Mode> = self.modes.iter().filter(|m| m.electromechanical).collect();
        v.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
        v
    }

    /// Lowest-frequency electromechanical mode.
    pub fn mode_a(&self) -> Option<&Mode> {
        self.electromechanical().first().copied()
    }

    /// Second-lowest electromechanical mode.
    pub fn mode_b(&self) -> Option<&Mode> {
        self.electromechanical().get(1).copied()
    }

    /// Largest real part over all eigenvalues, skipping `|lambda| < tol`
    /// (the angle reference of a system without an infinite bus).
    pub fn max_real_part(&self, tol: f64) -> f64 {
        self.eigenvalues
            .iter()
            .filter(|l| l.norm() >= tol)
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigenvalues, eigenvectors (`Psi = Phi^-1`), participation factors and
/// electromechanical classification of `a`.
pub fn modal_analysis(a: &Array2<f64>, layout: &StateLayout) -> Result<ModalAnalysis> {
    let n = a.nrows();
    let (lambda, phi) = a.eig()?;
    let psi = phi.inv()?;
    let condition = phi.opnorm_one()? * psi.opnorm_one()?;
    let scale = lambda.iter().fold(1.0f64, |m, l| m.max(l.norm()));

    let mech: Vec<bool> = layout.kinds.iter().map(|k| k.is_machine_mechanical()).collect();
    let speed: Vec<usize> = layout
        .kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| matches!(k, StateKind::MachineSpeed(_)))
        .map(|(i, _)| i)
        .collect();

    let mut modes = Vec::new();
    for i in 0..n {
        let l = lambda[i];
        if l.im < 0.0 {
            continue;
        }
        let mut p: Vec<f64> = (0..n).map(|k| (phi[[k, i]] * psi[[i, k]]).norm()).collect();
        let total: f64 = p.iter().sum();
        let share = if total > 0.0 {
            p.iter().zip(&mech).filter(|(_, m)| **m).map(|(v, _)| v).sum::<f64>() / total
        } else {
            0.0
        };
        let pmax = p.iter().cloned().fold(0.0, f64::max);
        if pmax > 0.0 {
            p.iter_mut().for_each(|v| *v /= pmax);
        }
        let defective = (0..n).any(|j| j != i && (lambda[j] - l).norm() < 1e-7 * scale);
        if defective {
            p.clear();
        }
        let f = frequency_hz(l);
        let mut shape: Vec<Complex64> = speed.iter().map(|&k| phi[[k, i]]).collect();
        if let Some(big) = shape.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) {
            if big.norm() > 0.0 {
                shape.iter_mut().for_each(|s| *s /= big);
            }
        }
        modes.push(Mode {
            index: i,
            eigenvalue: l,
            damping_pct: damping_ratio_pct(l),
            frequency_hz: f,
            participation: p,
            machine_share: share,
            electromechanical: l.im > 0.0 && share > EM_SHARE && f >= EM_BAND_HZ.0 && f <= EM_BAND_HZ.1,
            defective,
            shape,
        });
    }
    Ok(ModalAnalysis {
        eigenvalues: lambda,
        right: phi,
        left: psi,
        modes,
        condition,
    })
}

/// Linear free response `x(t) = Phi exp(Lambda t) Psi dx0` (real part).
pub fn free_response(analysis: &ModalAnalysis, dx0: &Array1<f64>, t: f64) -> Array1<f64> {
    let z: Array1<Complex64> = dx0.mapv(|v| Complex64::new(v, 0.0));
    let mut c = analysis.left.dot(&z);
    for (ci, l) in c.iter_mut().zip(&analysis.eigenvalues) {
        *ci *= (l * t).exp();
    }
    analysis.right.dot(&c).mapv(|v| v.re)
}

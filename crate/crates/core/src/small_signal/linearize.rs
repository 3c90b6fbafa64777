use ndarray::{Array1, Array2};

use crate::dynamics::DynamicModel;
use crate::error::{Error, Result};

/// Largest admissible `|dx/dt|` at a linearization point.
pub const EQUILIBRIUM_TOL: f64 = 1e-6;

/// State matrix at `x0` by central differences with
/// `h_j = max(1e-6, 1e-6 |x0_j|)`.
///
/// Fails when `x0` is not an equilibrium or when any limiter or gate is
/// engaged there, since the Jacobian would not describe small deviations.
pub fn linearize(model: &DynamicModel, x0: &Array1<f64>) -> Result<Array2<f64>> {
    let x = x0.as_slice().ok_or_else(|| Error::InvalidInput("state must be contiguous".into()))?;
    let ev = model.evaluate(x)?;
    let worst = ev.dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst >= EQUILIBRIUM_TOL {
        return Err(Error::NotEquilibrium(worst));
    }
    let active = ev.limits.active();
    if !active.is_empty() {
        return Err(Error::LimiterActive(active.join(", ")));
    }
    jacobian(model, x)
}

/// Central-difference Jacobian without the equilibrium checks.
pub fn jacobian(model: &DynamicModel, x: &[f64]) -> Result<Array2<f64>> {
    jacobian_of(|y| model.rhs(y), x)
}

/// Central-difference Jacobian of any vector field.
pub fn jacobian_of(f: impl Fn(&[f64]) -> Result<Array1<f64>>, x: &[f64]) -> Result<Array2<f64>> {
    let n = x.len();
    let mut a = Array2::zeros((n, n));
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = (1e-6 * x[j].abs()).max(1e-6);
        xp[j] = x[j] + h;
        let fp = f(&xp)?;
        xp[j] = x[j] - h;
        let fm = f(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            a[[i, j]] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(a)
}

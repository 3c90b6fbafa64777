use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use crate::case::NetworkCase;
use crate::error::Result;

/// Converged DC grid state.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    pub u: Vec<f64>,
    /// Power injected into the DC grid at the slack bus.
    pub p_slack: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Nodal conductance matrix of the DC lines.
pub fn dc_conductance(case: &NetworkCase) -> Result<Array2<f64>> {
    let n = case.dc_buses.len();
    let mut g = Array2::zeros((n, n));
    for l in &case.dc_lines {
        let (f, t) = (case.dc_bus_index(l.from)?, case.dc_bus_index(l.to)?);
        let y = 1.0 / l.r_dc;
        g[[f, f]] += y;
        g[[t, t]] += y;
        g[[f, t]] -= y;
        g[[t, f]] -= y;
    }
    Ok(g)
}

/// Solves `p_i = u_i * sum_j G_ij u_j` for all buses but `slack`, whose
/// voltage is held at `u_slack`. `p` holds the power injected into the DC
/// grid at every bus; the slack entry is ignored.
pub fn solve_dc_grid(
    case: &NetworkCase,
    p: &[f64],
    slack: usize,
    u_slack: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DcSolution> {
    let g = dc_conductance(case)?;
    let n = g.nrows();
    let others: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let mut u = Array1::from_elem(n, u_slack);
    let mut residual;
    let mut iterations = 0;

    let mismatch = |u: &Array1<f64>| -> Array1<f64> {
        let gu = g.dot(u);
        Array1::from_iter(others.iter().map(|&i| p[i] - u[i] * gu[i]))
    };

    loop {
        let f = mismatch(&u);
        residual = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if residual < tol || others.is_empty() || !residual.is_finite() || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let gu = g.dot(&u);
        let m = others.len();
        let mut jac = Array2::zeros((m, m));
        for (r, &i) in others.iter().enumerate() {
            for (c, &j) in others.iter().enumerate() {
                jac[[r, c]] = u[i] * g[[i, j]] + if i == j { gu[i] } else { 0.0 };
            }
        }
        let dx = jac.solve_into(f)?;
        for (r, &i) in others.iter().enumerate() {
            u[i] += dx[r];
        }
    }
    if others.is_empty() {
        residual = 0.0;
    }
    let gu = g.dot(&u);
    Ok(DcSolution {
        p_slack: u[slack] * gu[slack],
        u: u.to_vec(),
        converged: residual < tol,
        iterations,
        residual,
    })
}

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// DC line between bus positions `from` and `to`. A line with `l == 0`
/// is purely resistive and carries no state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcBranch<T> {
    pub from: usize,
    pub to: usize,
    pub r: T,
    pub l: T,
}

impl<T: Scalar> DcBranch<T> {
    pub fn is_dynamic(&self) -> bool {
        self.l > T::zero()
    }
}

/// Derivatives of the DC grid.
///
/// `line_i` holds the currents of the inductive lines in line order (one
/// entry per dynamic line). Bus equations: `C du/dt = i_inj - sum(i_out)`.
/// Line equations: `L di/dt = u_from - u_to - r i`.
pub fn dc_grid_rhs<T: Scalar>(
    caps: &[T],
    lines: &[DcBranch<T>],
    u: &[T],
    line_i: &[T],
    injection: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    if let Some(k) = u.iter().position(|v| !(*v > T::zero())) {
        return Err(Error::Numerical(format!("DC voltage at bus position {k} is {}", u[k])));
    }
    let mut net: Vec<T> = injection.to_vec();
    let mut di = Vec::with_capacity(line_i.len());
    let mut dyn_idx = 0;
    for line in lines {
        let i = if line.is_dynamic() {
            let i = line_i[dyn_idx];
            dyn_idx += 1;
            di.push((u[line.from] - u[line.to] - line.r * i) / line.l);
            i
        } else {
            (u[line.from] - u[line.to]) / line.r
        };
        net[line.from] -= i;
        net[line.to] += i;
    }
    let du = net.iter().zip(caps).map(|(n, c)| *n / *c).collect();
    Ok((du, di))
}

use ndarray::Array2;
use num_complex::Complex64;

use super::NetworkCase;
use crate::error::Result;

/// Bus admittance matrix of the in-service AC branches (pi model).
///
/// `Y_kk` accumulates series admittance plus half the line charging of each
/// incident branch; `Y_km = -y_series`. Loads and machines are not included.
pub fn build_ybus(case: &NetworkCase) -> Result<Array2<Complex64>> {
    let n = case.buses.len();
    let mut y = Array2::<Complex64>::zeros((n, n));
    for br in case.branches.iter().filter(|b| b.status) {
        let f = case.bus_index(br.from)?;
        let t = case.bus_index(br.to)?;
        let ys = Complex64::new(br.r, br.x).inv();
        let ysh = Complex64::new(0.0, 0.5 * br.b_shunt);
        y[[f, f]] += ys + ysh;
        y[[t, t]] += ys + ysh;
        y[[f, t]] -= ys;
        y[[t, f]] -= ys;
    }
    Ok(y)
}

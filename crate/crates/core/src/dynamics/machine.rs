use crate::scalar::Scalar;

/// Classical machine on the system base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingParams<T> {
    /// Inertia constant, s.
    pub h: T,
    /// Damping torque coefficient, pu.
    pub d: T,
    /// Base angular frequency, rad/s.
    pub omega_b: T,
}

/// Swing equation: returns `(d delta/dt, d dw/dt)`.
pub fn machine_rhs<T: Scalar>(params: &SwingParams<T>, dw: T, p_m: T, p_e: T) -> (T, T) {
    (
        params.omega_b * dw,
        (p_m - p_e - params.d * dw) / (T::two() * params.h),
    )
}

/// Droop governor with one lag: `T_g p_m' = p_ref - dw / R - p_m`.
pub fn governor_rhs<T: Scalar>(p_ref: T, dw: T, p_m: T, r: T, t_g: T) -> T {
    (p_ref - dw / r - p_m) / t_g
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: SwingParams<f64> = SwingParams { h: 3.5, d: 0.0, omega_b: 314.159 };

    #[test]
    fn equilibrium() {
        assert_eq!(machine_rhs(&P, 0.0, 0.8, 0.8), (0.0, 0.0));
    }

    #[test]
    fn electrical_power_drop_accelerates() {
        let (_, a) = machine_rhs(&P, 0.0, 0.8, 0.7);
        assert!((a - 0.1 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn damping_term() {
        let p = SwingParams { d: 10.0, ..P };
        let (dd, a) = machine_rhs(&p, 0.01, 0.5, 0.5);
        assert!((a + 0.1 / 7.0).abs() < 1e-12);
        assert!((dd - 3.14159).abs() < 1e-9);
    }

    #[test]
    fn governor_settles_on_droop_line() {
        let (r, tg) = (0.05, 0.5);
        assert_eq!(governor_rhs(0.8, 0.0, 0.8, r, tg), 0.0);
        // Over-speed lowers mechanical power.
        assert!(governor_rhs(0.8f32, 0.001, 0.8, 0.05, 0.5) < 0.0);
    }
}

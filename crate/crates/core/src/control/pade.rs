use crate::scalar::Scalar;

/// Second-order Pade approximation of a pure delay,
/// `(1 - tau s/2 + tau^2 s^2/12) / (1 + tau s/2 + tau^2 s^2/12)`.
///
/// Controllable canonical realization with unit feed-through:
/// `x1' = x2`, `x2' = -(12/tau^2) x1 - (6/tau) x2 + u`,
/// `y = u - (12/tau) x2`. With `tau = 0` the block is a pass-through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadeDelay<T> {
    pub tau: T,
    pub x1: T,
    pub x2: T,
    pub u_prev: T,
}

impl<T: Scalar> PadeDelay<T> {
    pub fn new(tau: T) -> Self {
        Self {
            tau,
            x1: T::zero(),
            x2: T::zero(),
            u_prev: T::zero(),
        }
    }

    pub fn is_bypass(&self) -> bool {
        self.tau <= T::zero()
    }

    /// State matrix `A`, input `B`, output `C` and feed-through `D`.
    pub fn matrices(tau: T) -> ([[T; 2]; 2], [T; 2], [T; 2], T) {
        let z = T::zero();
        let a = [[z, T::one()], [-T::lit(12.0) / (tau * tau), -T::lit(6.0) / tau]];
        (a, [z, T::one()], [z, -T::lit(12.0) / tau], T::one())
    }

    pub fn output(&self, u: T) -> T {
        if self.is_bypass() {
            return u;
        }
        u - T::lit(12.0) / self.tau * self.x2
    }

    pub fn derivatives(&self, u: T) -> (T, T) {
        if self.is_bypass() {
            return (T::zero(), T::zero());
        }
        let (a, b, _, _) = Self::matrices(self.tau);
        (
            a[0][0] * self.x1 + a[0][1] * self.x2 + b[0] * u,
            a[1][0] * self.x1 + a[1][1] * self.x2 + b[1] * u,
        )
    }

    /// Trapezoidal step to input `u`; returns the delayed output.
    pub fn step(&self, u: T, dt: T) -> (T, Self) {
        if self.is_bypass() {
            return (u, Self { u_prev: u, ..*self });
        }
        let (a, b, _, _) = Self::matrices(self.tau);
        let h = dt * T::half();
        // (I - hA) x+ = (I + hA) x + h B (u_prev + u)
        let m = [[T::one() - h * a[0][0], -h * a[0][1]], [-h * a[1][0], T::one() - h * a[1][1]]];
        let uu = self.u_prev + u;
        let r0 = self.x1 + h * (a[0][0] * self.x1 + a[0][1] * self.x2) + h * b[0] * uu;
        let r1 = self.x2 + h * (a[1][0] * self.x1 + a[1][1] * self.x2) + h * b[1] * uu;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let x1 = (r0 * m[1][1] - m[0][1] * r1) / det;
        let x2 = (m[0][0] * r1 - m[1][0] * r0) / det;
        let next = Self {
            tau: self.tau,
            x1,
            x2,
            u_prev: u,
        };
        (next.output(u), next)
    }
}

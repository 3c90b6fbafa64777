use crate::scalar::Scalar;

/// First-order lag `1 / (1 + T s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass<T> {
    pub t: T,
}

impl<T: Scalar> LowPass<T> {
    pub fn derivative(&self, x: T, u: T) -> T {
        (u - x) / self.t
    }

    /// Trapezoidal update from `(x, u_prev)` to the new input `u`.
    pub fn step(&self, x: T, u_prev: T, u: T, dt: T) -> T {
        let two_t = T::two() * self.t;
        ((two_t - dt) * x + dt * (u_prev + u)) / (two_t + dt)
    }
}

/// Washout `T s / (1 + T s)` realized as `y = u - x`, `x' = (u - x) / T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Washout<T> {
    pub t: T,
}

impl<T: Scalar> Washout<T> {
    pub fn output(&self, x: T, u: T) -> T {
        u - x
    }

    pub fn derivative(&self, x: T, u: T) -> T {
        (u - x) / self.t
    }

    pub fn step(&self, x: T, u_prev: T, u: T, dt: T) -> T {
        LowPass { t: self.t }.step(x, u_prev, u, dt)
    }
}

/// Internal state of one low-pass -> washout chain.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelState<T> {
    /// Input of the previous step (frequency error, pu).
    pub e_prev: T,
    pub lowpass: T,
    pub washout: T,
}

impl<T: Scalar> ChannelState<T> {
    /// Washout output, before gain and saturation.
    pub fn output(&self) -> T {
        self.lowpass - self.washout
    }

    pub fn step(&self, e: T, tf: T, tw: T, dt: T) -> Self {
        let lowpass = LowPass { t: tf }.step(self.lowpass, self.e_prev, e, dt);
        let washout = Washout { t: tw }.step(self.washout, self.lowpass, lowpass, dt);
        Self {
            e_prev: e,
            lowpass,
            washout,
        }
    }

    /// Continuous-time derivatives `(d lowpass, d washout)` for error `e`.
    pub fn derivatives(&self, e: T, tf: T, tw: T) -> (T, T) {
        (
            LowPass { t: tf }.derivative(self.lowpass, e),
            Washout { t: tw }.derivative(self.washout, self.lowpass),
        )
    }
}

use crate::scalar::Scalar;

/// Minimum connection-point voltage for converting power references into
/// current references.
pub const MIN_VOLTAGE: f64 = 0.01;

/// Power references of one converter after the P/Q limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VscSetpoints<T> {
    pub p_ref: T,
    pub q_ref: T,
}

/// Current limiter with d-axis priority.
pub fn current_limit<T: Scalar>(i_d: T, i_q: T, i_max: T) -> (T, T) {
    if (i_d * i_d + i_q * i_q).sqrt() <= i_max {
        return (i_d, i_q);
    }
    let d = i_d.max(-i_max).min(i_max);
    let q_room = (i_max * i_max - d * d).max(T::zero()).sqrt();
    (d, i_q.max(-q_room).min(q_room))
}

/// Current references `i_d = p/u`, `i_q = -q/u`, limited. Zero below
/// [`MIN_VOLTAGE`].
pub fn current_refs<T: Scalar>(sp: &VscSetpoints<T>, u_s: T, i_max: T) -> (T, T) {
    if u_s < T::lit(MIN_VOLTAGE) {
        return (T::zero(), T::zero());
    }
    current_limit(sp.p_ref / u_s, -sp.q_ref / u_s, i_max)
}

/// First-order inner current loops: returns `(d i_d/dt, d i_q/dt)`.
pub fn vsc_rhs<T: Scalar>(i_d: T, i_q: T, sp: &VscSetpoints<T>, u_s: T, i_max: T, tau: T) -> (T, T) {
    let (d_ref, q_ref) = current_refs(sp, u_s, i_max);
    ((d_ref - i_d) / tau, (q_ref - i_q) / tau)
}

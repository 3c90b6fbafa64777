use crate::case::VscStation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Direction of active power through a converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// AC to DC.
    Rectifier,
    /// DC to AC.
    Inverter,
}

impl Direction {
    /// Classifies by the sign of the AC-side injection (`p_s < 0` draws
    /// power from the AC grid).
    pub fn from_ac_injection<T: Scalar>(p_s: T) -> Self {
        if p_s < T::zero() {
            Direction::Rectifier
        } else {
            Direction::Inverter
        }
    }
}

/// Quadratic converter loss curve `a + b i + c i^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefficients<T> {
    pub a: T,
    pub b: T,
    pub c_rec: T,
    pub c_inv: T,
}

impl<T: Scalar> LossCoefficients<T> {
    pub fn eval(&self, i_s: T, dir: Direction) -> T {
        let c = match dir {
            Direction::Rectifier => self.c_rec,
            Direction::Inverter => self.c_inv,
        };
        self.a + self.b * i_s + c * i_s * i_s
    }
}

impl LossCoefficients<f64> {
    pub fn of(vsc: &VscStation) -> Self {
        Self {
            a: vsc.loss_a,
            b: vsc.loss_b,
            c_rec: vsc.loss_c_rec,
            c_inv: vsc.loss_c_inv,
        }
    }
}

/// Converter losses for current magnitude `i_s` (RMS, same base as the
/// coefficients).
pub fn losses<T: Scalar>(i_s: T, dir: Direction, coeffs: &LossCoefficients<T>) -> Result<T> {
    if !(i_s >= T::zero()) {
        return Err(Error::InvalidInput(format!(
            "converter current magnitude must be non-negative, got {i_s}"
        )));
    }
    Ok(coeffs.eval(i_s, dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE: LossCoefficients<f64> = LossCoefficients {
        a: 11.033e-3,
        b: 3.464e-3,
        c_rec: 4.40e-3,
        c_inv: 6.67e-3,
    };

    #[test]
    fn table_values() {
        assert_eq!(losses(0.0, Direction::Rectifier, &TABLE).unwrap(), 0.011033);
        assert!((losses(1.0, Direction::Rectifier, &TABLE).unwrap() - 0.018897).abs() < 1e-12);
        assert!((losses(1.0, Direction::Inverter, &TABLE).unwrap() - 0.021167).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_current() {
        assert!(losses(-0.1, Direction::Inverter, &TABLE).is_err());
        assert!(losses(f64::NAN, Direction::Inverter, &TABLE).is_err());
    }

    #[test]
    fn f32_curve() {
        let c = LossCoefficients::<f32> { a: 0.011033, b: 0.003464, c_rec: 0.0044, c_inv: 0.00667 };
        assert!((losses(1.0f32, Direction::Rectifier, &c).unwrap() - 0.018897).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn monotone_in_current(i1 in 0.0f64..2.0, di in 1e-6f64..1.0, rect in any::<bool>()) {
            let dir = if rect { Direction::Rectifier } else { Direction::Inverter };
            prop_assert!(TABLE.eval(i1, dir) < TABLE.eval(i1 + di, dir));
        }
    }
}

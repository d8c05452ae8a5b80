//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Tolerance used when validating simplex constraints.
    ///
    /// `1e-12` for `f64`; for coarser types it widens to a small multiple of
    /// machine epsilon so that freshly constructed sets still validate.
    fn validation_tol() -> Self {
        let floor = Self::from_f64(1e-12).unwrap();
        let eps = Self::epsilon() * Self::from_f64(64.0).unwrap();
        floor.max(eps)
    }

    /// Weights at or below this level count as exact zeros.
    fn zero_weight() -> Self {
        let floor = Self::from_f64(1e-15).unwrap();
        floor.max(Self::epsilon())
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Dot product of two equally sized slices.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Neumaier-compensated sum.
pub fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_per_type() {
        assert_eq!(f64::validation_tol(), 1e-12);
        assert!(f32::validation_tol() > 1e-6);
        assert_eq!(f64::zero_weight(), 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let vals = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum::<f64>(vals) - 4e-16).abs() < 1e-30);
    }
}

//! Scalar abstraction shared by every solver component.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::{DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar the solvers are generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + FromStr + Debug + Display + LowerExp + Send + Sync + 'static {
    /// Converts an `f64` constant into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal must be representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    /// Machine epsilon of the scalar type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// True when every entry is finite.
pub fn all_finite<T: Real>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Shortest round-trip decimal form, switching to exponent notation for very
/// small or very large magnitudes.
pub fn format_real<T: Real>(v: T) -> String {
    let a = v.abs();
    if a == T::zero() || (a >= T::lit(1e-4) && a < T::lit(1e15)) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

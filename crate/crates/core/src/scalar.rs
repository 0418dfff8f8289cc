use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar backing the complex linear algebra: `f32` or `f64`.
pub trait Real:
    'static + Float + NumAssign + FromPrimitive + Default + Send + Sync + Debug + Display + LowerExp
{
    /// Machine epsilon as a plain `f64`, for tolerance bookkeeping.
    fn epsilon_f64() -> f64 {
        Self::epsilon().to_f64().unwrap_or(f64::EPSILON)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Conversion helper so literals read as `0.5.real()` rather than
/// `T::from_f64(0.5).unwrap()`.
pub trait AsReal<T> {
    fn real(self) -> T;
}

impl<T: Real> AsReal<T> for f64 {
    #[inline]
    fn real(self) -> T {
        T::from_f64(self).expect("f64 literal representable in scalar type")
    }
}

impl<T: Real> AsReal<T> for usize {
    #[inline]
    fn real(self) -> T {
        T::from_usize(self).expect("usize representable in scalar type")
    }
}

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the numerical primitives: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn n(x: usize) -> Self {
        Self::from_usize(x).expect("count representable in scalar type")
    }

    /// Relative tolerance appropriate for iterative series in this precision.
    #[inline]
    fn series_tol() -> Self {
        Self::epsilon() * Self::c(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

//! Scalar abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

use crate::quadrature::QuadValue;

/// Floating-point type the closed-form and quadrature code is written against.
///
/// Implemented for `f32` and `f64`. The Monte Carlo side of the crate is `f64` only.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + QuadValue<Self>
    + 'static
{
    /// Converts an `f64` literal. Panics only if the literal is not representable,
    /// which cannot happen for `f32`/`f64` (it saturates to infinity instead).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + QuadValue<T>
        + 'static
{
}

/// `sin(πx)/(πx)`, with the removable singularity at zero.
pub fn sinc_pi<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-8) {
        return T::one();
    }
    let px = T::PI() * x;
    px.sin() / px
}

/// Exponent helper for integer counts stored as `u32`.
#[inline]
pub fn from_u32<T: Real>(n: u32) -> T {
    T::lit(f64::from(n))
}

//! Numeric abstraction shared by the geometry and monitor code.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and the two implementors.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    /// Tolerance used for boundary ties in containment queries.
    #[inline]
    fn boundary_tol() -> Self {
        Self::epsilon().sqrt() * Self::lit(0.1)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

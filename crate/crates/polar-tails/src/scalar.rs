//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. The quadrature and root-finding tolerances
/// scale with [`Real::epsilon`], so `f32` instantiations converge to `f32`
/// accuracy rather than failing.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting an `f64` constant into `Self`.
    ///
    /// Panics only if the value is not representable, which cannot happen for
    /// the finite literals used in this crate.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    /// `self` as `f64`, for diagnostics and error reporting.
    fn as_f64(&self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

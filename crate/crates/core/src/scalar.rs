//! Scalar abstraction.
//!
//! Every numerical routine in the crate is written against [`Real`], a thin
//! extension of [`num_traits::Float`]. Complex values are `Complex<R>` from
//! `num-complex`. `f64` is the working precision for verification runs;
//! `f32` is supported with correspondingly looser tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real field the crate computes over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or configuration value.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used to accept a matrix or kernel as Hermitian.
    ///
    /// 1e-12 at double precision; never tighter than a small multiple of
    /// machine epsilon for narrower types.
    fn hermitian_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `R`.
pub type C<R> = Complex<R>;

pub(crate) fn czero<R: Real>() -> C<R> {
    Complex::new(R::zero(), R::zero())
}

pub(crate) fn cone<R: Real>() -> C<R> {
    Complex::new(R::one(), R::zero())
}

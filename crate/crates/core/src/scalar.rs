//! Floating-point abstraction for the numeric core.
//!
//! Everything that touches per-coefficient data (transforms, sensitivity
//! evaluation, pooling) is generic over [`Scalar`] so the same code runs in
//! `f64` where tests pin 1e-9 tolerances and in `f32` where the patch
//! pipeline is bandwidth-bound. Calibration and reporting stay in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssignOps};

/// Scalar type of the numeric core: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + NumAssignOps + Sum + Send + Sync + Debug + Display + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}

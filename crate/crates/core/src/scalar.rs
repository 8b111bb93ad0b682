//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Lossy view as `f64`, used for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Natural logarithm converted to bits.
    #[inline]
    fn ln_to_bits(self) -> Self {
        self / Self::LN_2()
    }

    /// `-½·log₂(1 - x)`, the Gaussian mutual information for squared correlation `x`.
    #[inline]
    fn gaussian_mi_bits(x: Self) -> Self {
        -(-x).ln_1p() / (Self::lit(2.0) * Self::LN_2())
    }
}

impl Real for f32 {}
impl Real for f64 {}

//! Floating-point scalar abstraction shared by the numeric code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// floating point: f32 or f64
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only for values the type cannot hold at all.
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

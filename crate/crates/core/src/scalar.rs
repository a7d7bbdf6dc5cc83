use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point scalar used by the continuous models (roofline timing,
/// access-time arithmetic, trend regression). Implemented for `f32` and `f64`.
pub trait Real: Float + FromPrimitive + NumCast + Debug + Display + Send + Sync + 'static {
    /// Lossy conversion from an integer count.
    fn from_count(count: u64) -> Self {
        <Self as NumCast>::from(count).expect("u64 is representable in every float type")
    }

    fn lit(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("f64 literal fits scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Any exact or floating scalar with field-like arithmetic, e.g. `f64` or
/// `Ratio<i64>`. Used where results must be exact for rational inputs.
pub trait Scalar: num_traits::Num + PartialOrd + Copy + Debug + Display {}

impl<T: num_traits::Num + PartialOrd + Copy + Debug + Display> Scalar for T {}

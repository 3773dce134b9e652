//! Numeric traits the core is generic over.
//!
//! Vector math (embeddings, cosine similarity, the index) needs a real
//! floating point type, so it is bounded by [`FloatScalar`]. Metric and
//! review aggregation only needs field arithmetic over counts, so it is
//! bounded by [`MetricScalar`], which is also implemented for exact
//! rationals.

use std::fmt::Debug;
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// floating point: f32 or f64
pub trait FloatScalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Default + Send + Sync + 'static
{
}

impl FloatScalar for f32 {}
impl FloatScalar for f64 {}

/// A number type that ratios of counts can be expressed in.
pub trait MetricScalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: usize) -> Self;

    /// `num / den`, or zero when `den == 0`.
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Self::zero()
        } else {
            Self::from_count(num) / Self::from_count(den)
        }
    }

    /// Lossy view used for export and display.
    fn to_f64(self) -> f64;
}

impl MetricScalar for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl MetricScalar for f32 {
    fn from_count(n: usize) -> Self {
        n as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl MetricScalar for Ratio<i64> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(n as i64)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

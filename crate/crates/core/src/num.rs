//! Scalar abstractions.
//!
//! Counting metrics (precisions, type/token ratios, specificity, control
//! correlation) are written against [`Scalar`], so they can be evaluated
//! either in floating point or exactly over [`Exact`] rationals. Anything
//! that takes a logarithm needs [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar.
pub type Exact = Ratio<i64>;

/// Field-like scalar: `f32`, `f64` or [`Exact`].
pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: u64) -> Self;

    /// `num / den` computed in the scalar's own arithmetic.
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn to_f64_lossy(&self) -> f64;
}

/// Floating point scalar used for log-domain quantities.
pub trait Real:
    Scalar + Float + FromPrimitive + Display + Default + Sum + Copy + serde::Serialize + serde::de::DeserializeOwned
{
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for Exact {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count fits in i64"))
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Numerically stable `ln(sum(exp(v)))`.
pub fn log_sum_exp<F: Real>(values: &[F]) -> F {
    let max = values
        .iter()
        .copied()
        .fold(F::neg_infinity(), |a, b| if b > a { b } else { a });
    if max == F::neg_infinity() {
        return max;
    }
    let sum: F = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_matches_literal_for_floats() {
        assert_eq!(f64::ratio(34, 100), 0.34);
        assert_eq!(f64::ratio(1, 10), 0.1);
        assert_eq!(Exact::ratio(34, 100), Ratio::new(17, 50));
    }

    #[test]
    fn log_sum_exp_of_probabilities() {
        let v = [0.5f64.ln(), 0.25f64.ln(), 0.25f64.ln()];
        assert!(log_sum_exp(&v).abs() < 1e-15);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }
}

//! Scalar abstractions shared by the exact algebra and the numerical oracle.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// An exact field: every nonzero element is invertible and equality is exact.
///
/// Polynomials and rational functions are generic over this trait. The
/// crate uses arbitrary-precision rationals everywhere results matter;
/// fixed-width ratios are accepted for small experiments.
pub trait ExactField:
    Clone + Eq + Hash + Debug + Display + Num + Signed + Send + Sync
{
    fn from_int(value: i64) -> Self;

    /// Numerator and denominator of the reduced fraction, as decimal strings.
    fn integer_pair(&self) -> (String, String);

    /// Parses `p/q` or a bare integer `p`.
    fn parse_pair(text: &str) -> Option<Self>;

    fn to_f64_lossy(&self) -> f64;
}

impl<T> ExactField for Ratio<T>
where
    T: Clone + Integer + Signed + Hash + Debug + Display + FromStr + FromPrimitive + ToPrimitive,
    T: Send + Sync,
    Ratio<T>: ToPrimitive,
{
    fn from_int(value: i64) -> Self {
        Ratio::from_integer(T::from_i64(value).expect("i64 fits the integer type"))
    }

    fn integer_pair(&self) -> (String, String) {
        (self.numer().to_string(), self.denom().to_string())
    }

    fn parse_pair(text: &str) -> Option<Self> {
        let text = text.trim();
        let (p, q) = match text.split_once('/') {
            Some((p, q)) => (p.trim().parse::<T>().ok()?, q.trim().parse::<T>().ok()?),
            None => (text.parse::<T>().ok()?, T::one()),
        };
        if q.is_zero() {
            return None;
        }
        Some(Ratio::new(p, q))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Floating point type used by the numerical oracle: f32 or f64.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

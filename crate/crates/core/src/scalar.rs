//! Scalar abstraction shared by the capacity analysis, the LP solver and the
//! scheduling weights.
//!
//! Floating point types (`f32`, `f64`) carry a pivot/feasibility tolerance;
//! [`Rational`] is exact and uses a zero tolerance, so the same simplex code
//! produces exact optima when instantiated over it.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Numeric field used throughout the crate.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Magnitude below which a value is treated as zero.
    fn tolerance() -> Self;

    /// Converts a probability or rate read from an input document.
    ///
    /// Exact types interpret `x` as the shortest decimal that round-trips to
    /// it, so `0.3` becomes `3/10` and not the binary expansion of the double.
    fn from_decimal(x: f64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-10
    }

    fn from_decimal(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn from_decimal(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for Rational {
    fn tolerance() -> Self {
        Rational::zero()
    }

    fn from_decimal(x: f64) -> Self {
        decimal_to_rational(x).expect("finite input")
    }
}

/// Exact value of the shortest decimal representation of `x`.
///
/// Returns `None` for NaN and infinities.
pub fn decimal_to_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    // `Display` for f64 never uses exponent notation and prints the shortest
    // digit string that parses back to the same value.
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow::pow(BigInt::from(10u8), frac_part.len());
    let value = Rational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Renders an exact rational as `p/q` (or `p` when integral).
pub fn rational_text(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

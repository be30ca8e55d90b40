//! Exact rationals and the unit interval.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::ParseError;

/// Arbitrary-precision rational used for every distance, weight and parameter.
pub type Rational = BigRational;

/// Builds `num/den` as an exact rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `p/q`, `p` or `-p/q`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseError> {
    let text = text.trim();
    let bad = || ParseError::new(0, format!("malformed rational literal `{text}`"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A rational number in the closed interval `[0, 1]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitValue(Rational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("value {0} is outside [0,1]")]
pub struct OutOfRange(pub String);

impl UnitValue {
    pub fn new(value: Rational) -> Result<Self, OutOfRange> {
        if value.is_negative() || value > Rational::one() {
            Err(OutOfRange(format_rational(&value)))
        } else {
            Ok(Self(value))
        }
    }

    /// Clamps into `[0, 1]`.
    pub fn clamped(value: Rational) -> Self {
        if value.is_negative() {
            Self::zero()
        } else if value > Rational::one() {
            Self::one()
        } else {
            Self(value)
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(ratio(num, den)).expect("literal outside [0,1]")
    }

    pub fn zero() -> Self {
        Self(Rational::zero())
    }

    pub fn one() -> Self {
        Self(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    /// `min(1, self + other)`, the truncated sum used by triangle relaxation.
    pub fn capped_add(&self, other: &Self) -> Self {
        let sum = &self.0 + &other.0;
        if sum > Rational::one() {
            Self::one()
        } else {
            Self(sum)
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `1 - self`.
    pub fn complement(&self) -> Self {
        Self(Rational::one() - &self.0)
    }

    /// True when the value lies strictly between 0 and 1.
    pub fn is_proper(&self) -> bool {
        !self.is_zero() && !self.is_one()
    }
}

impl fmt::Display for UnitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl fmt::Debug for UnitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnitValue({self})")
    }
}

impl FromStr for UnitValue {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r = parse_rational(s)?;
        UnitValue::new(r).map_err(|e| ParseError::new(0, e.to_string()))
    }
}

impl TryFrom<Rational> for UnitValue {
    type Error = OutOfRange;

    fn try_from(value: Rational) -> Result<Self, Self::Error> {
        UnitValue::new(value)
    }
}

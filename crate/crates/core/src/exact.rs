//! Exact number helpers.
//!
//! Cache sizes are small rationals over machine integers ([`Frac`]); request
//! probabilities and expected rates use arbitrary precision ([`Exact`]) so
//! that products over `K` users never overflow.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Cache sizes in file units.
pub type Frac = Ratio<i64>;

/// Probabilities and expected rates.
pub type Exact = BigRational;

/// Parses `"3/4"`, `"0.765"`, `"-2"`, `"1e-3"` into an exact rational.
///
/// Decimal strings are read digit for digit, so `"0.765"` becomes `153/200`
/// rather than the nearest binary double.
pub fn parse_exact(text: &str) -> Result<Exact> {
    let s = text.trim();
    let bad = || Error::validation(format!("cannot parse {text:?} as a number"));
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::validation(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&all_digits).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

pub fn exact_to_f64(x: &Exact) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn frac_to_exact(x: Frac) -> Exact {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

pub fn frac_to_f64(x: Frac) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Converts an exact value to a machine rational when it fits.
pub fn exact_to_frac(x: &Exact) -> Result<Frac> {
    let n = x
        .numer()
        .to_i64()
        .ok_or(Error::Overflow("rational conversion"))?;
    let d = x
        .denom()
        .to_i64()
        .ok_or(Error::Overflow("rational conversion"))?;
    Ok(Frac::new(n, d))
}

pub fn exact_from_f64(x: f64) -> Result<Exact> {
    if !x.is_finite() {
        return Err(Error::validation(format!("non-finite value {x}")));
    }
    // Shortest round-trip decimal, read back exactly.
    parse_exact(&format!("{x:?}"))
}

/// A number kept exactly as written in a config file.
///
/// Deserializes from a JSON number or from a string such as `"153/200"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactNumber(pub Exact);

impl ExactNumber {
    pub fn value(&self) -> &Exact {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }
}

impl From<Exact> for ExactNumber {
    fn from(x: Exact) -> Self {
        ExactNumber(x)
    }
}

impl From<i64> for ExactNumber {
    fn from(x: i64) -> Self {
        ExactNumber(BigRational::from_integer(BigInt::from(x)))
    }
}

impl fmt::Display for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for ExactNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Some(i) = self.0.numer().to_i64() {
                return serializer.serialize_i64(i);
            }
        }
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        let parsed = match &value {
            serde_json::Value::Number(n) => parse_exact(&n.to_string()),
            serde_json::Value::String(s) => parse_exact(s),
            other => Err(Error::validation(format!(
                "expected a number, found {other}"
            ))),
        };
        parsed.map(ExactNumber).map_err(serde::de::Error::custom)
    }
}

/// Whether `x` lies in `[0, 1]`.
pub fn is_probability(x: &Exact) -> bool {
    !x.is_negative() && x <= &Exact::one()
}

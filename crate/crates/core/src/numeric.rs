//! Exact rationals, the scalar abstraction shared by the simplex solver, and
//! the decimal parsing / 12-significant-digit formatting used for all I/O.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, NumAssignRef, NumRef, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Significant digits used whenever a number is written out.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Field operations needed by the simplex solver. Implemented for exact
/// rationals and for `f64`.
pub trait Scalar: Clone + PartialOrd + fmt::Debug + NumRef + NumAssignRef + Signed + Send + Sync {
    const EXACT: bool;

    fn from_rational(value: &Rational) -> Self;

    fn to_rational(&self) -> Rational;
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(value: &Rational) -> Self {
        to_f64(value)
    }

    fn to_rational(&self) -> Rational {
        from_f64(*self)
    }
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact binary value of a finite float.
pub fn from_f64(value: f64) -> Rational {
    Rational::from_f64(value).unwrap_or_else(Rational::zero)
}

/// Largest integer not exceeding `value`, as a count.
pub fn floor_count(value: &Rational) -> usize {
    value.floor().to_integer().to_usize().unwrap_or(0)
}

/// Parses `"3"`, `"-0.25"`, `"1.5e-3"` or `"1/3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::InvalidParameter(format!("not a number: {text:?}"));
    if let Some((numer, denom)) = text.split_once('/') {
        let numer = BigInt::from_str(numer.trim()).map_err(|_| bad())?;
        let denom = BigInt::from_str(denom.trim()).map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(numer, denom));
    }

    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let mut numer = BigInt::from_str(&digits).map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// `%.{digits}g`-style formatting with trailing zeros removed.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, value)).to_string()
    }
}

fn trim_zeros(text: &str) -> &str {
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.')
    } else {
        text
    }
}

/// Formats a rational with [`SIGNIFICANT_DIGITS`].
pub fn fmt_num(value: &Rational) -> String {
    format_sig(to_f64(value), SIGNIFICANT_DIGITS)
}

/// Rounds to [`SIGNIFICANT_DIGITS`] so that serializers print at most that
/// many digits.
pub fn rounded_f64(value: &Rational) -> f64 {
    fmt_num(value).parse().unwrap_or(f64::NAN)
}

/// `n` choose `k` as an exact integer.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn min_rational<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b {
        a
    } else {
        b
    }
}

/// JSON number that keeps its decimal text exact on input and prints with
/// [`SIGNIFICANT_DIGITS`] on output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JsonNumber(pub Rational);

impl serde::Serialize for JsonNumber {
    /// Written as its 12-significant-digit decimal text, so integers carry no
    /// trailing `.0`.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let text = fmt_num(&self.0);
        let number: serde_json::Number = text.parse().map_err(serde::ser::Error::custom)?;
        number.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for JsonNumber {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let number = serde_json::Number::deserialize(deserializer)?;
        parse_rational(&number.to_string()).map(JsonNumber).map_err(serde::de::Error::custom)
    }
}

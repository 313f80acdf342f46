//! Helpers for exact rationals: parsing, printing and conversion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// The exact value of a finite float.
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Parse(format!("{x} is not finite")))
}

/// Nearest rational with denominator `denom`.
pub fn rationalize(x: f64, denom: i64) -> BigRational {
    frac((x * denom as f64).round() as i64, denom)
}

/// Accepts `p/q`, integers and plain decimals such as `0.62`.
pub fn parse(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("cannot read {text:?} as a rational number"));
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, fractional) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && fractional.is_empty()
        || !whole.chars().chain(fractional.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: BigInt = format!("{whole}{fractional}0").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), fractional.len() + 1);
    let value = BigRational::new(digits, scale);
    Ok(if negative { -value } else { value })
}

/// `p/q`, or just `p` for integers.
pub fn format(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

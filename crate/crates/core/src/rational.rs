//! Helpers for exact rationals: parsing decimal strings exactly, stable
//! conversion to binary64, and a few constructors used across the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `7`, `-3/4`, `0.065`, `1e-3` or `2.5E+2` into an exact rational.
/// Decimal inputs receive power-of-ten denominators, so `0.065` is `13/200`.
pub fn parse(text: &str) -> Result<Q, ParseRationalError> {
    let s = text.trim();
    let err = || ParseRationalError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse(n)?;
        let d = parse(d)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all: String = format!("{whole}{frac}");
    let mut value = Q::from_integer(all.parse::<BigInt>().unwrap_or_default());
    let shift = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    if shift >= 0 {
        value *= Q::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        value /= Q::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// Nearest binary64 to `q`, robust for numerators and denominators far
/// beyond the f64 range.
pub fn to_f64(q: &Q) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 1e300 && d < 1e300 {
            return n / d;
        }
    }
    // Scale to keep 64 significant bits in both parts.
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift_n = (nb - 64).max(0);
    let shift_d = (db - 64).max(0);
    let n = (q.numer().abs() >> shift_n as usize).to_f64().unwrap_or(f64::NAN);
    let d = (q.denom() >> shift_d as usize).to_f64().unwrap_or(f64::NAN);
    let v = n / d * 2f64.powi((shift_n - shift_d) as i32);
    if q.is_negative() {
        -v
    } else {
        v
    }
}

/// Closest rational with a power-of-ten denominator `10^digits` (round half away).
pub fn from_f64_decimal(v: f64, digits: u32) -> Q {
    let scale = 10f64.powi(digits as i32);
    let n = (v * scale).round();
    Q::new(
        BigInt::from(n as i128),
        num_traits::pow(BigInt::from(10), digits as usize),
    )
}

/// Exact midpoint.
pub fn midpoint(a: &Q, b: &Q) -> Q {
    (a + b) / int(2)
}

/// Decimal rendering with a fixed number of significant digits, for reports.
pub fn to_decimal_string(q: &Q, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), to_f64(q))
}

/// `n/d` or `n` text.
pub fn to_exact_string(q: &Q) -> String {
    if is_integer(q) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Serde adapter writing a rational as a binary64 number.
pub fn serialize_decimal<S: serde::Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(to_f64(q))
}

/// Serde adapter writing a rational as exact `n/d` text.
pub fn serialize_exact<S: serde::Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&to_exact_string(q))
}

/// `true` when `q` is an integer.
pub fn is_integer(q: &Q) -> bool {
    q.denom().is_one()
}

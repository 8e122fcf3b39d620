use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::rational;

/// Coefficient field of a [`MultiPoly`](super::MultiPoly).
///
/// Two fields are provided: exact rationals (`BigRational`) and binary64.
/// Mixing them inside one polynomial is impossible by construction.
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `true` for the exact field; exact fields never use tolerances.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
    /// Zero test used by elimination; for binary64 it is relative to `scale`.
    fn negligible(&self, scale: f64) -> bool;
    fn fmt_coeff(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result;
    fn below_zero(&self) -> bool;
}

impl Coeff for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        rational::to_f64(self)
    }

    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }

    fn fmt_coeff(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }

    fn below_zero(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Coeff for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(q: &BigRational) -> Self {
        rational::to_f64(q)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn negligible(&self, scale: f64) -> bool {
        self.abs() <= 1e-11 * scale.max(1.0)
    }

    fn fmt_coeff(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:e}")
    }

    fn below_zero(&self) -> bool {
        *self < 0.0
    }
}

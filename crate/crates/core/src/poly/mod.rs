//! Sparse multivariate polynomials with graded (total-degree) access.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded lexicographic: lower total degree first, then `x > y > z` within
//! a degree. Iteration, printing and linear-system assembly all follow this
//! order, so results are reproducible run to run.

mod coeff;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;
use thiserror::Error;

pub use coeff::Coeff;
pub use parse::ParseError;

use crate::rational::Q;

/// Exact-rational polynomial.
pub type QPoly = MultiPoly<Q>;
/// Binary64 polynomial.
pub type FPoly = MultiPoly<f64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    VariableCount { left: usize, right: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    VariableIndex { index: usize, nvars: usize },
    #[error("evaluation point has {got} coordinates, polynomial has {expected} variables")]
    PointLength { expected: usize, got: usize },
}

/// Exponent vector of one term.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(SmallVec<[u16; 4]>);

impl Monomial {
    pub fn new(exponents: &[u16]) -> Self {
        Monomial(SmallVec::from_slice(exponents))
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, nvars))
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut m = Self::one(nvars);
        m.0[index] = 1;
        m
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// All monomials of total degree `degree` in `nvars` variables, in graded-lex order.
    pub fn of_degree(nvars: usize, degree: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u16; nvars];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<Monomial>) {
            if pos + 1 == cur.len() {
                cur[pos] = left as u16;
                out.push(Monomial::new(cur));
                return;
            }
            for e in (0..=left).rev() {
                cur[pos] = e as u16;
                rec(pos + 1, left - e, cur, out);
            }
        }
        if nvars == 0 {
            if degree == 0 {
                out.push(Monomial::new(&[]));
            }
            return out;
        }
        rec(0, degree, &mut cur, &mut out);
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial in `nvars` variables over the field `C`.
///
/// Invariant: no stored coefficient is zero.
#[derive(Clone, PartialEq, Debug)]
pub struct MultiPoly<C: Coeff> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

/// The terms of one total degree.
#[derive(Clone, PartialEq, Debug)]
pub struct GradedSlice<C: Coeff> {
    pub degree: u32,
    pub poly: MultiPoly<C>,
}

impl<C: Coeff> GradedSlice<C> {
    pub fn is_empty(&self) -> bool {
        self.poly.is_zero()
    }
}

impl<C: Coeff> MultiPoly<C> {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::term(Monomial::one(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        Self::term(Monomial::var(nvars, index), C::one())
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut p = Self::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging repeats.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, C)>,
    {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "monomial arity");
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exponents: &[u16]) -> C {
        self.terms
            .get(&Monomial::new(exponents))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    pub fn coeff_of(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Highest total degree, `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// Lowest total degree, `None` for the zero polynomial.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().next().map(Monomial::degree)
    }

    /// Highest power of one variable.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var] as u32).max().unwrap_or(0)
    }

    /// Adds `c * m` in place, keeping the no-zero invariant.
    pub fn add_term(&mut self, m: Monomial, c: C) {
        debug_assert_eq!(m.nvars(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                let sum = v.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_arity(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars == other.nvars {
            Ok(())
        } else {
            Err(PolyError::VariableCount {
                left: self.nvars,
                right: other.nvars,
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_arity(other)?;
        let mut out = Self::zero(self.nvars);
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                out.add_term(a.mul(b), u.clone() * v.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self::from_terms(
            self.nvars,
            self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())),
        )
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn partial_derivative(&self, var: usize) -> Result<Self, PolyError> {
        if var >= self.nvars {
            return Err(PolyError::VariableIndex {
                index: var,
                nvars: self.nvars,
            });
        }
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[var] -= 1;
            out.add_term(dm, c.clone() * C::from_i64(e as i64));
        }
        Ok(out)
    }

    pub fn graded_part(&self, degree: u32) -> GradedSlice<C> {
        let poly = Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() == degree)
                .map(|(m, c)| (m.clone(), c.clone())),
        );
        GradedSlice { degree, poly }
    }

    /// All non-empty graded slices, lowest degree first.
    pub fn graded_parts(&self) -> Vec<GradedSlice<C>> {
        let mut out: Vec<GradedSlice<C>> = Vec::new();
        for (m, c) in &self.terms {
            let d = m.degree();
            if out.last().map(|s| s.degree) != Some(d) {
                out.push(GradedSlice {
                    degree: d,
                    poly: Self::zero(self.nvars),
                });
            }
            let last = out.last_mut().expect("pushed above");
            last.poly.add_term(m.clone(), c.clone());
        }
        out
    }

    /// Drops every term of total degree above `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() <= max_degree)
                .map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    pub fn evaluate(&self, point: &[C]) -> Result<C, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::PointLength {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut powers: Vec<Vec<C>> = point.iter().map(|v| vec![C::one(), v.clone()]).collect();
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[i];
                while cache.len() <= e as usize {
                    let next = cache[cache.len() - 1].clone() * point[i].clone();
                    cache.push(next);
                }
                t = t * cache[e as usize].clone();
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Substitutes `images[i]` for variable `i`; the result lives in the
    /// images' ring. Terms above `max_degree` are dropped as they are formed
    /// when a bound is given.
    pub fn compose(&self, images: &[MultiPoly<C>], max_degree: Option<u32>) -> Result<Self, PolyError> {
        if images.len() != self.nvars {
            return Err(PolyError::PointLength {
                expected: self.nvars,
                got: images.len(),
            });
        }
        let target = images.first().map(|p| p.nvars).unwrap_or(0);
        for img in images {
            if img.nvars != target {
                return Err(PolyError::VariableCount {
                    left: target,
                    right: img.nvars,
                });
            }
        }
        let cut = |p: Self| match max_degree {
            Some(d) => p.truncate(d),
            None => p,
        };
        let mut powers: Vec<Vec<Self>> = images.iter().map(|p| vec![Self::one(target), p.clone()]).collect();
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut t = Self::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[i];
                while cache.len() <= e as usize {
                    let next = cut(&cache[cache.len() - 1] * &images[i]);
                    cache.push(next);
                }
                t = cut(&t * &cache[e as usize]);
            }
            for (tm, tc) in t.terms {
                out.add_term(tm, tc);
            }
        }
        Ok(out)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        MultiPoly::from_terms(self.nvars, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub fn to_f64(&self) -> FPoly {
        self.map_coeffs(C::to_f64)
    }

    /// Adds trailing variables (the new variables do not occur).
    pub fn extend_vars(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars);
        Self::from_terms(
            nvars,
            self.terms.iter().map(|(m, c)| {
                let mut e: SmallVec<[u16; 4]> = m.0.clone();
                e.resize(nvars, 0);
                (Monomial(e), c.clone())
            }),
        )
    }

    /// Text form in graded-lex order with the given variable names.
    pub fn display<'a>(&'a self, names: &'a [&'a str]) -> PolyDisplay<'a, C> {
        PolyDisplay { poly: self, names }
    }
}

impl QPoly {
    /// Parses a polynomial expression such as `3/2 * x^2 y - z + 4`
    /// (the output of `display`) or a general expression with parentheses,
    /// powers and implicit multiplication.
    pub fn parse(text: &str, names: &[&str]) -> Result<Self, ParseError> {
        parse::parse_poly(text, names)
    }
}

pub const XYZ: [&str; 3] = ["x", "y", "z"];

pub struct PolyDisplay<'a, C: Coeff> {
    poly: &'a MultiPoly<C>,
    names: &'a [&'a str],
}

struct CoeffFmt<'a, C: Coeff>(&'a C);

impl<C: Coeff> fmt::Display for CoeffFmt<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt_coeff(f)
    }
}

impl<C: Coeff> fmt::Display for PolyDisplay<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.poly.terms.iter().enumerate() {
            let (neg, mag) = if c.below_zero() {
                (true, -c.clone())
            } else {
                (false, c.clone())
            };
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let unit = mag.is_one() && m.degree() > 0;
            if !unit {
                write!(f, "{}", CoeffFmt(&mag))?;
            }
            let mut first = true;
            for (v, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                f.write_str(match (first, unit) {
                    (true, true) => "",
                    (true, false) => " * ",
                    _ => " ",
                })?;
                first = false;
                let name = self.names.get(v).copied().unwrap_or("?");
                if e == 1 {
                    write!(f, "{name}")?;
                } else {
                    write!(f, "{name}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl<C: Coeff> fmt::Display for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let default: Vec<String> = if self.nvars <= 3 {
            XYZ[..self.nvars].iter().map(|s| s.to_string()).collect()
        } else {
            (0..self.nvars).map(|i| format!("v{i}")).collect()
        };
        let names: Vec<&str> = default.iter().map(String::as_str).collect();
        write!(f, "{}", self.display(&names))
    }
}

// Operator forms panic on arity mismatch; use the `try_*` methods when the
// arity is not known statically.
impl<C: Coeff> Add for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn add(self, rhs: Self) -> MultiPoly<C> {
        self.try_add(rhs).expect("polynomial arity")
    }
}

impl<C: Coeff> Sub for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn sub(self, rhs: Self) -> MultiPoly<C> {
        self.try_sub(rhs).expect("polynomial arity")
    }
}

impl<C: Coeff> Mul for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn mul(self, rhs: Self) -> MultiPoly<C> {
        self.try_mul(rhs).expect("polynomial arity")
    }
}

impl<C: Coeff> Neg for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn neg(self) -> MultiPoly<C> {
        self.scale(&-C::one())
    }
}

impl<C: Coeff> Add for MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn add(self, rhs: Self) -> MultiPoly<C> {
        &self + &rhs
    }
}

impl<C: Coeff> Sub for MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn sub(self, rhs: Self) -> MultiPoly<C> {
        &self - &rhs
    }
}

impl<C: Coeff> Mul for MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn mul(self, rhs: Self) -> MultiPoly<C> {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn q(s: &str) -> QPoly {
        QPoly::parse(s, &XYZ).unwrap()
    }

    #[test]
    fn cancellation_and_identity() {
        assert_eq!(&q("x + y") + &q("x - y"), q("2 x"));
        let p = q("3/2 x^2 y - z + 4");
        assert_eq!(&p + &QPoly::zero(3), p);
        assert_eq!(&p * &QPoly::one(3), p);
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn binomial_square() {
        let s = q("y^2 + z^2");
        assert_eq!(&s * &s, q("y^4 + 2 y^2 z^2 + z^4"));
        assert_eq!(s.pow(2), q("y^4 + 2 y^2 z^2 + z^4"));
    }

    #[test]
    fn naive_term_merge() {
        let s = q("y^2 + z^2");
        let sum = &s + &s;
        // list-of-terms oracle: concatenate, then merge by scanning
        let mut list: Vec<(Vec<u16>, Q)> = Vec::new();
        for (m, c) in s.terms().chain(s.terms()) {
            match list.iter_mut().find(|(e, _)| e.as_slice() == m.exponents()) {
                Some((_, v)) => *v += c,
                None => list.push((m.exponents().to_vec(), c.clone())),
            }
        }
        assert_eq!(list.len(), sum.len());
        for (e, c) in list {
            assert_eq!(sum.coeff(&e), c);
        }
        assert_eq!(sum, q("2 y^2 + 2 z^2"));
    }

    #[test]
    fn derivatives() {
        assert_eq!(q("x^2 y z").partial_derivative(0).unwrap(), q("2 x y z"));
        assert!(q("7").partial_derivative(1).unwrap().is_zero());
        assert!(matches!(
            q("x").partial_derivative(3),
            Err(PolyError::VariableIndex { index: 3, nvars: 3 })
        ));
    }

    #[test]
    fn graded_slices() {
        let p = q("x^2 + y^3");
        assert_eq!(p.graded_part(2).poly, q("x^2"));
        assert!(p.graded_part(1).is_empty());
        assert_eq!(p.total_degree(), Some(3));
        assert_eq!(p.min_degree(), Some(2));
    }

    #[test]
    fn evaluation() {
        let p = q("y^2 + z^2");
        assert_eq!(p.evaluate(&[int(5), int(1), int(1)]).unwrap(), int(2));
        assert_eq!(QPoly::zero(3).evaluate(&[int(1), int(2), int(3)]).unwrap(), int(0));
        assert!(p.evaluate(&[int(1)]).is_err());
    }

    #[test]
    fn arity_mismatch_rejected() {
        let a = QPoly::var(2, 0);
        let b = QPoly::var(3, 0);
        assert!(a.try_add(&b).is_err());
        assert!(a.try_mul(&b).is_err());
    }

    #[test]
    fn ordering_is_graded_lex() {
        let p = q("z^2 + 1 + y z + x + x^2 + z + x y");
        let order: Vec<Vec<u16>> = p.terms().map(|(m, _)| m.exponents().to_vec()).collect();
        assert_eq!(
            order,
            vec![
                vec![0, 0, 0],
                vec![1, 0, 0],
                vec![0, 0, 1],
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![0, 1, 1],
                vec![0, 0, 2],
            ]
        );
        let degree2: Vec<Vec<u16>> = Monomial::of_degree(3, 2)
            .iter()
            .map(|m| m.exponents().to_vec())
            .collect();
        assert_eq!(degree2[0], vec![2, 0, 0]);
        assert_eq!(degree2[5], vec![0, 0, 2]);
    }

    #[test]
    fn display_round_trips() {
        let p = q("-3/2 x^2 y + 4 z - 1 + 2/7 x z^3");
        let text = p.to_string();
        assert_eq!(text, "-1 + 4 * z - 3/2 * x^2 y + 2/7 * x z^3");
        assert_eq!(q(&text), p);
    }

    #[test]
    fn compose_substitutes() {
        // p(x, y, z) = x^2 + y with x -> y + z (2 variables y, z)
        let p = q("x^2 + y");
        let y = QPoly::var(2, 0);
        let z = QPoly::var(2, 1);
        let r = p.compose(&[&y + &z, y.clone(), z.clone()], None).unwrap();
        let names = ["y", "z"];
        assert_eq!(r, QPoly::parse("y^2 + 2 y z + z^2 + y", &names).unwrap());
        let r2 = p.compose(&[&y + &z, y, z], Some(1)).unwrap();
        assert_eq!(r2, QPoly::parse("y", &names).unwrap());
    }

    #[test]
    fn float_mode_tracks_exact() {
        let p = q("1/3 x^2 - 2/7 y z + 5");
        let pf = p.to_f64();
        let v = pf.evaluate(&[0.5, -1.25, 2.0]).unwrap();
        let e = p.evaluate(&[ratio(1, 2), ratio(-5, 4), int(2)]).unwrap();
        assert!((v - crate::rational::to_f64(&e)).abs() < 1e-14);
    }
}

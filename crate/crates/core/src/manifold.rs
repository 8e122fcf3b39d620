//! Center-manifold series `x = h(y, z)`, the restriction of a quadratic form
//! onto it and the Sylvester test.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::linsolve;
use crate::poly::{Monomial, PolyError, QPoly};
use crate::rational::{self, int, Q};
use crate::spectral;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("spectral hypothesis violated: {0}")]
    SpectralHypothesisViolated(String),
    #[error("manifold order must be at least 1, got {0}")]
    Order(u32),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `x = h(y, z)` through degree `order`; `h` is stored in `(x, y, z)` and
/// does not involve `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterManifold {
    pub h: QPoly,
    pub order: u32,
}

impl CenterManifold {
    /// Coefficient of `y^l z^m`.
    pub fn coeff(&self, l: u16, m: u16) -> Q {
        self.h.coeff(&[0, l, m])
    }

    pub fn linear_part(&self) -> QPoly {
        self.h.graded_part(1).poly
    }
}

impl fmt::Display for CenterManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x = {}", self.h.display(&crate::poly::XYZ))
    }
}

/// Linear part of a polynomial vector field as a matrix.
pub fn linear_matrix(g: &[QPoly; 3]) -> [[Q; 3]; 3] {
    let mut a: [[Q; 3]; 3] = Default::default();
    for (i, gi) in g.iter().enumerate() {
        for (j, v) in a[i].iter_mut().enumerate() {
            let mut e = [0u16; 3];
            e[j] = 1;
            *v = gi.coeff(&e);
        }
    }
    a
}

/// `G1(h) - h_y G2(h) - h_z G3(h)` with `x` replaced by `h`, truncated.
pub fn invariance_residual(g: &[QPoly; 3], h: &QPoly, max_degree: u32) -> Result<QPoly, PolyError> {
    let images = [h.clone(), QPoly::var(3, 1), QPoly::var(3, 2)];
    let on = |p: &QPoly| p.compose(&images, Some(max_degree));
    let hy = h.partial_derivative(1)?;
    let hz = h.partial_derivative(2)?;
    let r = on(&g[0])?
        .try_sub(&hy.try_mul(&on(&g[1])?)?)?
        .try_sub(&hz.try_mul(&on(&g[2])?)?)?;
    Ok(r.truncate(max_degree))
}

/// Solves the invariance equation degree by degree. The linear part is the
/// center eigenspace, the kernel of the left eigenvector of the real
/// eigenvalue, which must equal the trace (the pair has zero real part).
pub fn center_manifold_series(g: &[QPoly; 3], order: u32) -> Result<CenterManifold, ManifoldError> {
    if order < 1 {
        return Err(ManifoldError::Order(order));
    }
    let a = linear_matrix(g);
    let cp = spectral::char_poly(&a);
    let lambda = &a[0][0] + &a[1][1] + &a[2][2];
    if !spectral::eval_cubic(&cp, &lambda).is_zero() || !lambda.is_negative() {
        return Err(ManifoldError::SpectralHypothesisViolated(
            "linear part lacks a negative eigenvalue with a purely imaginary pair".into(),
        ));
    }
    // Left eigenvector: rows of (A - lambda I)^T have a one-dimensional kernel.
    let mut m: Vec<Vec<Q>> = vec![vec![Q::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[j][i].clone();
        }
        m[i][i] -= &lambda;
    }
    let rr = linsolve::rref(m, vec![Q::zero(); 3]);
    let free = rr.free_columns();
    if free.len() != 1 {
        return Err(ManifoldError::SpectralHypothesisViolated(
            "the real eigenvalue is not simple".into(),
        ));
    }
    let l = rr.kernel_vector(free[0]);
    if l[0].is_zero() {
        return Err(ManifoldError::SpectralHypothesisViolated(
            "center eigenspace is not a graph over (y, z)".into(),
        ));
    }
    let mut h = QPoly::from_terms(
        3,
        [
            (Monomial::new(&[0, 1, 0]), -(&l[1] / &l[0])),
            (Monomial::new(&[0, 0, 1]), -(&l[2] / &l[0])),
        ],
    );
    for d in 2..=order {
        let known = invariance_residual(g, &h, d)?.graded_part(d).poly;
        let monos: Vec<Monomial> = (0..=d as u16)
            .rev()
            .map(|l| Monomial::new(&[0, l, d as u16 - l]))
            .collect();
        let mut matrix = vec![vec![Q::zero(); monos.len()]; monos.len()];
        for (col, mono) in monos.iter().enumerate() {
            let trial = &h + &QPoly::term(mono.clone(), int(1));
            let image = invariance_residual(g, &trial, d)?.graded_part(d).poly;
            let delta = &image - &known;
            for (row, mm) in monos.iter().enumerate() {
                matrix[row][col] = delta.coeff_of(mm);
            }
        }
        let rhs: Vec<Q> = monos.iter().map(|mm| -known.coeff_of(mm)).collect();
        let rr = linsolve::rref(matrix, rhs);
        if rr.rank() != monos.len() {
            return Err(ManifoldError::SpectralHypothesisViolated(format!(
                "singular invariance system at degree {d}"
            )));
        }
        let sol = rr.solve_with(&[]);
        for (mono, c) in monos.into_iter().zip(sol) {
            h.add_term(mono, c);
        }
    }
    Ok(CenterManifold { h, order })
}

/// Symmetric 2x2 matrix of a quadratic form in `(y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedForm {
    pub m: [[Q; 2]; 2],
}

/// Quadratic part of `q(h(y, z), y, z)`.
pub fn restrict_quadratic(q: &QPoly, h: &CenterManifold) -> Result<RestrictedForm, PolyError> {
    let images = [h.linear_part(), QPoly::var(3, 1), QPoly::var(3, 2)];
    let r = q.graded_part(2).poly.compose(&images, Some(2))?;
    let yz = r.coeff(&[0, 1, 1]) / int(2);
    Ok(RestrictedForm {
        m: [[r.coeff(&[0, 2, 0]), yz.clone()], [yz, r.coeff(&[0, 0, 2])]],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SylvesterReport {
    #[serde(serialize_with = "ser_minors")]
    pub minors: [Q; 2],
    pub positive_definite: bool,
}

fn ser_minors<S: serde::Serializer>(m: &[Q; 2], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    for q in m {
        seq.serialize_element(&rational::to_f64(q))?;
    }
    seq.end()
}

/// Both leading principal minors strictly positive.
pub fn sylvester_positive_definite(f: &RestrictedForm) -> SylvesterReport {
    let m1 = f.m[0][0].clone();
    let m2 = &f.m[0][0] * &f.m[1][1] - &f.m[0][1] * &f.m[1][0];
    SylvesterReport {
        positive_definite: m1.is_positive() && m2.is_positive(),
        minors: [m1, m2],
    }
}

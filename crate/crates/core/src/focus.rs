//! Focus quantities on the center manifold.
//!
//! For a vector field `G` with linear part having one negative eigenvalue and
//! a purely imaginary pair, a polynomial `Psi` is built degree by degree so
//! that
//!
//! ```text
//! Psi_x G1 + Psi_y G2 + Psi_z G3 = g1 (y^2+z^2)^2 + g2 (y^2+z^2)^3 + ...
//! ```
//!
//! Each degree is one linear system. Odd degrees have a unique solution, even
//! degrees `2i+2` also determine `g_i` and leave one coefficient free.

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::linsolve;
use crate::model::{self, ModelError, ModelParams, TruncatedSystem};
use crate::poly::{Coeff, Monomial, MultiPoly, PolyError};
use crate::rational::{self, Q};
use crate::spectral;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FocusError {
    #[error("spectral hypothesis violated at degree {degree}: {reason}")]
    SpectralHypothesisViolated { degree: u32, reason: String },
    #[error("degree {got} solved out of order, expected {expected}")]
    DegreeOrder { expected: u32, got: u32 },
    #[error("g1 has the same sign at both ends of [{lo}, {hi}]; no bracketed root")]
    NoBracketedRoot { lo: String, hi: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// How the underdetermined coefficients are fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct FreePolicy {
    /// Quadratic monomial normalized to `quadratic_value`.
    pub quadratic_monomial: Monomial,
    pub quadratic_value: Q,
    /// Value of the free coefficient at degree 4.
    pub degree4: Q,
    /// Value of the free coefficient at even degrees above 4.
    pub higher: Q,
}

impl Default for FreePolicy {
    fn default() -> Self {
        FreePolicy {
            quadratic_monomial: Monomial::new(&[0, 2, 0]),
            quadratic_value: Q::one(),
            degree4: Q::one(),
            higher: Q::zero(),
        }
    }
}

impl FreePolicy {
    /// Multiplies every assigned value by `c`, so that every `g_i` scales by `c`.
    pub fn scaled(&self, c: &Q) -> Self {
        FreePolicy {
            quadratic_monomial: self.quadratic_monomial.clone(),
            quadratic_value: &self.quadratic_value * c,
            degree4: &self.degree4 * c,
            higher: &self.higher * c,
        }
    }

    fn free_value(&self, degree: u32) -> &Q {
        if degree == 4 {
            &self.degree4
        } else {
            &self.higher
        }
    }
}

/// One free coefficient fixed by the policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub degree: u32,
    /// Exponents `(j, l, m)` of the free monomial `x^j y^l z^m`.
    pub monomial: Vec<u16>,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub value: Q,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCandidate<C: Coeff> {
    pub psi: MultiPoly<C>,
    /// The quadratic normalization, recorded first, then one entry per even
    /// degree from 4 on.
    pub ledger: Vec<LedgerEntry>,
}

impl<C: Coeff> LyapunovCandidate<C> {
    pub fn quadratic_part(&self) -> MultiPoly<C> {
        self.psi.graded_part(2).poly
    }
}

/// Incremental state of the degree-by-degree solve.
#[derive(Debug, Clone)]
pub struct FocusState<C: Coeff> {
    pub candidate: LyapunovCandidate<C>,
    pub g: Vec<C>,
    next_degree: u32,
    max_degree: u32,
    /// `X(Psi)` truncated at `max_degree`.
    flow: MultiPoly<C>,
}

impl<C: Coeff> FocusState<C> {
    /// State able to reach `g_n` (degree `2n + 2`).
    pub fn new(n: usize) -> Self {
        FocusState {
            candidate: LyapunovCandidate {
                psi: MultiPoly::zero(3),
                ledger: Vec::new(),
            },
            g: Vec::new(),
            next_degree: 2,
            max_degree: 2 * n as u32 + 2,
            flow: MultiPoly::zero(3),
        }
    }

    pub fn next_degree(&self) -> u32 {
        self.next_degree
    }

    /// `X(Psi)`, truncated at the highest degree this state will solve.
    pub fn flow(&self) -> &MultiPoly<C> {
        &self.flow
    }
}

/// `Psi_x G1 + Psi_y G2 + Psi_z G3`.
pub fn apply_vector_field<C: Coeff>(psi: &MultiPoly<C>, g: &[MultiPoly<C>; 3]) -> Result<MultiPoly<C>, PolyError> {
    let mut out = MultiPoly::zero(psi.nvars());
    for (v, gv) in g.iter().enumerate() {
        let d = psi.partial_derivative(v)?;
        out = out.try_add(&d.try_mul(gv)?)?;
    }
    Ok(out)
}

/// `(y^2 + z^2)^k` in `(x, y, z)`.
pub fn rho_power<C: Coeff>(k: u32) -> MultiPoly<C> {
    let y = MultiPoly::<C>::var(3, 1);
    let z = MultiPoly::<C>::var(3, 2);
    (&(&y * &y) + &(&z * &z)).pow(k)
}

/// Degree-`d` part of `X(Psi) - sum g_s (y^2+z^2)^(s+1)`.
pub fn graded_residual<C: Coeff>(
    psi: &MultiPoly<C>,
    g_sys: &[MultiPoly<C>; 3],
    gs: &[C],
    degree: u32,
) -> Result<MultiPoly<C>, PolyError> {
    let mut r = apply_vector_field(psi, g_sys)?.graded_part(degree).poly;
    for (s, gv) in gs.iter().enumerate() {
        let k = s as u32 + 2;
        if 2 * k == degree {
            r = &r - &rho_power::<C>(k).scale(gv);
        }
    }
    Ok(r)
}

fn violated(degree: u32, reason: impl Into<String>) -> FocusError {
    FocusError::SpectralHypothesisViolated {
        degree,
        reason: reason.into(),
    }
}

/// Solves the next degree. Returns `g_(degree/2 - 1)` at even degrees from 4.
pub fn solve_degree<C: Coeff>(
    state: &mut FocusState<C>,
    sys: &[MultiPoly<C>; 3],
    degree: u32,
    policy: &FreePolicy,
) -> Result<Option<C>, FocusError> {
    if degree != state.next_degree {
        return Err(FocusError::DegreeOrder {
            expected: state.next_degree,
            got: degree,
        });
    }
    for g in sys {
        if g.nvars() != 3 {
            return Err(PolyError::VariableCount {
                left: 3,
                right: g.nvars(),
            }
            .into());
        }
    }
    let monos = Monomial::of_degree(3, degree);
    let index = |m: &Monomial| monos.binary_search(m).ok();
    let with_g = degree >= 4 && degree.is_multiple_of(2);
    let ncols = monos.len() + usize::from(with_g);
    let linear: [MultiPoly<C>; 3] = [0, 1, 2].map(|v| sys[v].graded_part(1).poly);

    let mut matrix = vec![vec![C::zero(); ncols]; monos.len()];
    for (col, m) in monos.iter().enumerate() {
        let image = apply_vector_field(&MultiPoly::term(m.clone(), C::one()), &linear)?;
        for (mm, c) in image.terms() {
            if let Some(row) = index(mm) {
                matrix[row][col] = matrix[row][col].clone() + c.clone();
            }
        }
    }
    if with_g {
        let rho = rho_power::<C>(degree / 2);
        for (mm, c) in rho.terms() {
            let row = index(mm).expect("homogeneous of this degree");
            matrix[row][ncols - 1] = matrix[row][ncols - 1].clone() - c.clone();
        }
    }
    let known = state.flow.graded_part(degree).poly;
    let rhs: Vec<C> = monos.iter().map(|m| -known.coeff_of(m)).collect();
    let rr = linsolve::rref(matrix, rhs);
    if !rr.is_consistent() {
        return Err(violated(degree, "inconsistent graded system"));
    }
    let free = rr.free_columns();
    let solution: Vec<C> = if degree == 2 {
        if free.len() != 1 {
            return Err(violated(
                degree,
                format!("quadratic kernel has dimension {}, expected 1", free.len()),
            ));
        }
        let k = rr.kernel_vector(free[0]);
        let at = index(&policy.quadratic_monomial)
            .ok_or_else(|| violated(degree, "normalization monomial is not quadratic"))?;
        if k[at].negligible(1.0) {
            return Err(violated(degree, "normalized coefficient vanishes on the kernel"));
        }
        let f = C::from_rational(&policy.quadratic_value) / k[at].clone();
        state.candidate.ledger.push(LedgerEntry {
            degree,
            monomial: policy.quadratic_monomial.exponents().to_vec(),
            value: policy.quadratic_value.clone(),
        });
        k.into_iter().map(|v| v * f.clone()).collect()
    } else if degree % 2 == 1 {
        if !free.is_empty() {
            return Err(violated(
                degree,
                format!("{} free coefficients at odd degree", free.len()),
            ));
        }
        rr.solve_with(&[])
    } else {
        if free.len() != 1 || free[0] == ncols - 1 {
            return Err(violated(
                degree,
                format!("{} free coefficients at even degree, expected 1", free.len()),
            ));
        }
        let value = policy.free_value(degree).clone();
        state.candidate.ledger.push(LedgerEntry {
            degree,
            monomial: monos[free[0]].exponents().to_vec(),
            value: value.clone(),
        });
        rr.solve_with(&[(free[0], C::from_rational(&value))])
    };

    let piece = MultiPoly::from_terms(
        3,
        monos
            .iter()
            .zip(&solution)
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m.clone(), c.clone())),
    );
    let image = apply_vector_field(&piece, sys)?.truncate(state.max_degree);
    state.flow = &state.flow + &image;
    state.candidate.psi = &state.candidate.psi + &piece;
    state.next_degree += 1;
    if with_g {
        let g = solution[ncols - 1].clone();
        state.g.push(g.clone());
        Ok(Some(g))
    } else {
        Ok(None)
    }
}

/// `g_1..g_n` and the candidate that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusQuantities<C: Coeff> {
    pub g: Vec<C>,
    /// Graded degree at which each `g_i` was extracted, `2i + 2`.
    pub degrees: Vec<u32>,
    pub candidate: LyapunovCandidate<C>,
}

pub fn focus_quantities<C: Coeff>(
    sys: &[MultiPoly<C>; 3],
    n: usize,
    policy: &FreePolicy,
) -> Result<FocusQuantities<C>, FocusError> {
    let mut state = FocusState::new(n);
    for degree in 2..=2 * n as u32 + 2 {
        solve_degree(&mut state, sys, degree, policy)?;
    }
    Ok(FocusQuantities {
        degrees: (1..=n as u32).map(|i| 2 * i + 2).collect(),
        g: state.g,
        candidate: state.candidate,
    })
}

/// Smallest truncation order that does not affect `g_1..g_n`.
pub fn sufficient_order(n: usize) -> u32 {
    (2 * n as u32 + 1).max(3)
}

/// Warning text when `order` is too small for `n` quantities.
pub fn order_warning(order: u32, n: usize) -> Option<String> {
    let need = sufficient_order(n);
    (order < need).then(|| format!("truncation order {order} is below {need}; g_{n} depends on the truncation"))
}

/// Focus quantities of the calcium model with all normalizations imposed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFocus {
    pub params: ModelParams,
    pub system: TruncatedSystem,
    pub quantities: FocusQuantities<Q>,
    pub warning: Option<String>,
}

/// The truncated system after checking the spectral hypothesis exactly.
pub fn checked_system(params: &ModelParams, order: u32) -> Result<TruncatedSystem, FocusError> {
    let shifted = model::shift_to_equilibrium(params)?;
    let s = spectral::spectrum(&shifted.jacobian);
    if !s.hopf_normalized {
        return Err(violated(
            1,
            "the linearization does not have eigenvalues -1 and a purely imaginary pair",
        ));
    }
    Ok(model::taylor_truncate(&shifted, order)?)
}

pub fn model_focus(
    params: &ModelParams,
    n: usize,
    order: Option<u32>,
    policy: &FreePolicy,
) -> Result<ModelFocus, FocusError> {
    let order = order.unwrap_or_else(|| sufficient_order(n));
    let system = checked_system(params, order)?;
    let quantities = focus_quantities(&system.eqs, n, policy)?;
    Ok(ModelFocus {
        params: params.clone(),
        system,
        quantities,
        warning: order_warning(order, n),
    })
}

/// `g_1` at the Hopf-normalized parameters `(k3, k4, k5)`, exact.
pub fn g1_procedure(k3: &Q, k4: &Q, k5: &Q) -> Result<Q, FocusError> {
    let p = ModelParams::hopf_normalized(k3.clone(), k4.clone(), k5.clone())?;
    let f = model_focus(&p, 1, Some(3), &FreePolicy::default())?;
    Ok(f.quantities.g[0].clone())
}

/// A rational interval on which a function changes sign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootBracket {
    #[serde(serialize_with = "rational::serialize_exact")]
    pub lo: Q,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub hi: Q,
    pub sign_lo: i8,
    pub sign_hi: i8,
    pub evaluations: usize,
}

impl RootBracket {
    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Q {
        rational::midpoint(&self.lo, &self.hi)
    }
}

fn sign(q: &Q) -> i8 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

/// Exact bisection on the sign of `f` until the bracket is at most `width`.
/// Midpoints are rounded to dyadic rationals to keep denominators small.
pub fn bisect_sign_change<E>(
    mut f: impl FnMut(&Q) -> Result<Q, E>,
    lo: &Q,
    hi: &Q,
    width: &Q,
) -> Result<Option<RootBracket>, E> {
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    let mut s_lo = sign(&f(&lo)?);
    let s_hi = sign(&f(&hi)?);
    let mut evaluations = 2;
    if s_lo == 0 {
        hi = lo.clone();
    } else if s_hi == 0 {
        lo = hi.clone();
        s_lo = 0;
    } else if s_lo == s_hi {
        return Ok(None);
    }
    while &hi - &lo > *width {
        let mid = rational::midpoint(&lo, &hi);
        let s = sign(&f(&mid)?);
        evaluations += 1;
        if s == 0 {
            lo = mid.clone();
            hi = mid;
            break;
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(RootBracket {
        lo,
        hi,
        sign_lo: s_lo,
        sign_hi: s_hi,
        evaluations,
    }))
}

/// Bracket of the root of `g_1` in `k5` with `k3`, `k4` fixed.
pub fn g1_root_bisect(k3: &Q, k4: &Q, lo: &Q, hi: &Q, width: &Q) -> Result<RootBracket, FocusError> {
    bisect_sign_change(|k5| g1_procedure(k3, k4, k5), lo, hi, width)?.ok_or_else(|| FocusError::NoBracketedRoot {
        lo: rational::to_decimal_string(lo, 10),
        hi: rational::to_decimal_string(hi, 10),
    })
}

/// Bracket width used by default, `1e-9`.
pub fn default_root_width() -> Q {
    rational::ratio(1, 1_000_000_000)
}

/// `g_i` values converted to binary64.
pub fn to_f64_list(g: &[Q]) -> Vec<f64> {
    g.iter().map(rational::to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::rational::ratio;
    use crate::testutil;
    use crate::{FPoly, QPoly};

    fn p(s: &str) -> QPoly {
        QPoly::parse(s, &crate::poly::XYZ).unwrap()
    }

    fn sys(a: &str, b: &str, c: &str) -> [QPoly; 3] {
        [p(a), p(b), p(c)]
    }

    #[test]
    fn vector_field_examples() {
        let rot = sys("-x", "-z", "y");
        assert!(apply_vector_field(&p("y^2 + z^2"), &rot).unwrap().is_zero());
        let g = sys("-x", "0", "0");
        assert_eq!(apply_vector_field(&p("x^2"), &g).unwrap(), p("-2 x^2"));
    }

    #[test]
    fn linear_system_has_zero_quantities() {
        let f = focus_quantities(&sys("-x + y", "-2 z", "2 y"), 2, &FreePolicy::default()).unwrap();
        assert!(f.g.iter().all(Zero::is_zero));
        assert!(f.candidate.psi.graded_part(3).poly.is_zero());
        assert_eq!(f.degrees, vec![4, 6]);
    }

    #[test]
    fn out_of_order_degree_is_rejected() {
        let mut st = FocusState::<Q>::new(1);
        let r = solve_degree(&mut st, &sys("-x", "-z", "y"), 3, &FreePolicy::default());
        assert!(matches!(r, Err(FocusError::DegreeOrder { expected: 2, got: 3 })));
    }

    #[test]
    fn hyperbolic_linear_part_is_rejected() {
        let r = focus_quantities(&sys("-x", "-y", "-z"), 1, &FreePolicy::default());
        assert!(matches!(
            r,
            Err(FocusError::SpectralHypothesisViolated { degree: 2, .. })
        ));
    }

    /// First Lyapunov coefficient of `y' = -w z + f, z' = w y + g` by the
    /// classical planar formula; `g_1 = 2 a` with `Psi = y^2 + z^2 + ...`.
    fn planar_coefficient(f: &QPoly, g: &QPoly, w: &Q) -> Q {
        let d = |q: &QPoly, vars: &[usize]| -> Q {
            let mut r = q.clone();
            for &v in vars {
                r = r.partial_derivative(v).unwrap();
            }
            r.evaluate(&[int(0), int(0), int(0)]).unwrap()
        };
        let (y, z) = (1, 2);
        let third = d(f, &[y, y, y]) + d(f, &[y, z, z]) + d(g, &[y, y, z]) + d(g, &[z, z, z]);
        let second = d(f, &[y, z]) * (d(f, &[y, y]) + d(f, &[z, z]))
            - d(g, &[y, z]) * (d(g, &[y, y]) + d(g, &[z, z]))
            - d(f, &[y, y]) * d(g, &[y, y])
            + d(f, &[z, z]) * d(g, &[z, z]);
        third / int(16) + second / (int(16) * w)
    }

    #[test]
    fn planar_oracle() {
        use rand::Rng;
        let mut rng = testutil::rng(21);
        for _ in 0..50 {
            let w = ratio(rng.gen_range(1..6), rng.gen_range(1..4));
            let mut r = || ratio(rng.gen_range(-9..10), rng.gen_range(1..5));
            let f = QPoly::from_terms(
                3,
                [
                    (Monomial::new(&[0, 2, 0]), r()),
                    (Monomial::new(&[0, 1, 1]), r()),
                    (Monomial::new(&[0, 0, 2]), r()),
                    (Monomial::new(&[0, 3, 0]), r()),
                    (Monomial::new(&[0, 1, 2]), r()),
                ],
            );
            let g = QPoly::from_terms(
                3,
                [
                    (Monomial::new(&[0, 2, 0]), r()),
                    (Monomial::new(&[0, 1, 1]), r()),
                    (Monomial::new(&[0, 0, 2]), r()),
                    (Monomial::new(&[0, 2, 1]), r()),
                    (Monomial::new(&[0, 0, 3]), r()),
                ],
            );
            let s = [p("-x"), &p("-z").scale(&w) + &f, &p("y").scale(&w) + &g];
            let fq = focus_quantities(&s, 1, &FreePolicy::default()).unwrap();
            assert_eq!(fq.g[0], int(2) * planar_coefficient(&f, &g, &w));
        }
    }

    #[test]
    fn kstar_quadratic_part_and_ledger() {
        let params = ModelParams::hopf_normalized(ratio(1, 10), ratio(1, 10), ratio(13, 200)).unwrap();
        let f = model_focus(&params, 2, Some(5), &FreePolicy::default()).unwrap();
        let q = f.quantities.candidate.quadratic_part();
        assert_eq!(q.coeff(&[0, 2, 0]), int(1));
        let (k3, k4, k5) = (&params.k3, &params.k4, &params.k5);
        assert_eq!(q.coeff(&[0, 1, 1]), -((-k4 + k4 * k4 + k3 * k5) / (k3 * k4 * k5)));
        let ledger = &f.quantities.candidate.ledger;
        assert_eq!(ledger[0].monomial, vec![0, 2, 0]);
        assert_eq!(
            (ledger[1].degree, ledger[1].monomial.clone(), ledger[1].value.clone()),
            (4, vec![0, 0, 4], int(1))
        );
        assert_eq!(
            (ledger[2].degree, ledger[2].monomial.clone(), ledger[2].value.clone()),
            (6, vec![0, 0, 6], int(0))
        );
        assert!(f.quantities.g[0].is_positive());
    }

    #[test]
    fn residuals_vanish_per_degree() {
        let params = ModelParams::hopf_normalized(ratio(1, 10), ratio(1, 10), ratio(13, 200)).unwrap();
        let t = checked_system(&params, 5).unwrap();
        let mut st = FocusState::new(2);
        for d in 2..=6 {
            solve_degree(&mut st, &t.eqs, d, &FreePolicy::default()).unwrap();
            let r = graded_residual(&st.candidate.psi, &t.eqs, &st.g, d).unwrap();
            assert!(r.is_zero(), "degree {d}");
        }
    }

    #[test]
    fn free_value_does_not_change_g1() {
        let params = ModelParams::hopf_normalized(ratio(1, 10), ratio(1, 10), ratio(1, 20)).unwrap();
        let zero = FreePolicy {
            degree4: int(0),
            ..FreePolicy::default()
        };
        let a = model_focus(&params, 1, None, &FreePolicy::default()).unwrap();
        let b = model_focus(&params, 1, None, &zero).unwrap();
        assert_eq!(a.quantities.g[0], b.quantities.g[0]);
    }

    #[test]
    fn float_mode_agrees() {
        let params = ModelParams::hopf_normalized(ratio(1, 10), ratio(1, 10), ratio(13, 200)).unwrap();
        let t = checked_system(&params, 5).unwrap();
        let exact = focus_quantities(&t.eqs, 2, &FreePolicy::default()).unwrap();
        let fl: [FPoly; 3] = t.to_f64();
        let float = focus_quantities(&fl, 2, &FreePolicy::default()).unwrap();
        for (e, f) in exact.g.iter().zip(&float.g) {
            let e = rational::to_f64(e);
            assert!((e - f).abs() <= 1e-8 * e.abs().max(1.0), "{e} vs {f}");
        }
    }

    #[test]
    fn order_warning_threshold() {
        assert_eq!(sufficient_order(1), 3);
        assert_eq!(sufficient_order(2), 5);
        assert!(order_warning(3, 2).is_some());
        assert!(order_warning(5, 2).is_none());
    }

    #[test]
    fn bisection_on_a_line() {
        let b = bisect_sign_change(|x: &Q| Ok::<_, ()>(x - ratio(1, 3)), &int(0), &int(1), &ratio(1, 1000))
            .unwrap()
            .unwrap();
        assert!(b.lo < ratio(1, 3) && ratio(1, 3) < b.hi && b.width() <= ratio(1, 1000));
        assert!(
            bisect_sign_change(|x: &Q| Ok::<_, ()>(x + int(1)), &int(0), &int(1), &ratio(1, 10))
                .unwrap()
                .is_none()
        );
    }
}

//! Characteristic polynomial and eigenvalues of the 3x3 linearization,
//! closed forms of the complex pair and their parameter derivatives.

use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::poly::QPoly;
use crate::rational::{self, int, Q};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("non-oscillatory spectrum: radicand b = {0:e} is not negative")]
    NonOscillatory(f64),
}

/// `det(A - u I)` as `[c0, c1, c2, c3]` in ascending powers of `u`.
pub fn char_poly(a: &[[Q; 3]; 3]) -> [Q; 4] {
    let trace = &a[0][0] + &a[1][1] + &a[2][2];
    let minor = |i: usize, j: usize| &a[i][i] * &a[j][j] - &a[i][j] * &a[j][i];
    let m2 = minor(0, 1) + minor(0, 2) + minor(1, 2);
    let det = &a[0][0] * (&a[1][1] * &a[2][2] - &a[1][2] * &a[2][1])
        - &a[0][1] * (&a[1][0] * &a[2][2] - &a[1][2] * &a[2][0])
        + &a[0][2] * (&a[1][0] * &a[2][1] - &a[1][1] * &a[2][0]);
    [det, -m2, trace, int(-1)]
}

pub fn eval_cubic(c: &[Q; 4], u: &Q) -> Q {
    ((&c[3] * u + &c[2]) * u + &c[1]) * u + &c[0]
}

fn eval_cubic_f64(c: &[f64; 4], u: f64) -> f64 {
    ((c[3] * u + c[2]) * u + c[1]) * u + c[0]
}

/// Roots of a real cubic with nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum CubicRoots {
    /// One real root and a complex pair `re ± i im`, `im > 0`.
    OneReal { real: f64, re: f64, im: f64 },
    /// Three real roots in ascending order.
    ThreeReal([f64; 3]),
}

fn polish(c: &[f64; 4], mut u: f64) -> f64 {
    for _ in 0..8 {
        let p = eval_cubic_f64(c, u);
        let dp = (3.0 * c[3] * u + 2.0 * c[2]) * u + c[1];
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        u -= step;
        if step.abs() <= 1e-16 * u.abs().max(1.0) {
            break;
        }
    }
    u
}

/// Cardano for one real root, the trigonometric form for three, followed by
/// Newton polishing of the real roots.
pub fn solve_cubic(c: &[f64; 4]) -> CubicRoots {
    let (a, b, cc) = (c[2] / c[3], c[1] / c[3], c[0] / c[3]);
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + cc;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let shift = -a / 3.0;
    if disc > 0.0 {
        let s = disc.sqrt();
        let t = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        let real = polish(c, t + shift);
        // Deflate: u^2 + e1 u + e0.
        let e1 = a + real;
        let e0 = b + real * e1;
        let re = -e1 / 2.0;
        let im = (e0 - re * re).max(0.0).sqrt();
        CubicRoots::OneReal { real, re, im }
    } else {
        let r = (-p / 3.0).max(0.0).sqrt();
        let arg = if r == 0.0 {
            0.0
        } else {
            (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0)
        };
        let phi = arg.acos() / 3.0;
        let mut roots = [0, 1, 2].map(|k| {
            let t = 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
            polish(c, t + shift)
        });
        roots.sort_by(f64::total_cmp);
        CubicRoots::ThreeReal(roots)
    }
}

/// Eigen-structure of the linearization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    #[serde(serialize_with = "serialize_coeffs")]
    pub char_poly: [Q; 4],
    pub lambda1: f64,
    pub alpha: f64,
    /// Imaginary part of the pair, positive; zero for a real spectrum.
    pub beta: f64,
    pub oscillatory: bool,
    /// `|p(lambda1)| / (1 + |lambda1|^3)`.
    pub residual_p: f64,
    pub residual_alpha: f64,
    /// Exact real part of the pair when -1 is an exact eigenvalue.
    #[serde(serialize_with = "serialize_opt_exact")]
    pub alpha_exact: Option<Q>,
    pub minus_one_is_eigenvalue: bool,
    pub hopf_normalized: bool,
}

fn serialize_coeffs<S: serde::Serializer>(c: &[Q; 4], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(4))?;
    for q in c {
        seq.serialize_element(&rational::to_exact_string(q))?;
    }
    seq.end()
}

fn serialize_opt_exact<S: serde::Serializer>(q: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
    match q {
        Some(q) => rational::serialize_exact(q, s),
        None => s.serialize_none(),
    }
}

pub fn spectrum(a: &[[Q; 3]; 3]) -> SpectrumReport {
    let cp = char_poly(a);
    let cf = [0, 1, 2, 3].map(|i| rational::to_f64(&cp[i]));
    let minus_one = eval_cubic(&cp, &int(-1)).is_zero();
    let mut alpha_exact = None;
    let (lambda1, alpha, beta, oscillatory);
    if minus_one {
        // p(u) = (u + 1)(d2 u^2 + d1 u + d0)
        let d2 = cp[3].clone();
        let d1 = &cp[2] - &cp[3];
        let d0 = cp[0].clone();
        let ae = -(&d1 / (int(2) * &d2));
        let beta_sq = &d0 / &d2 - &ae * &ae;
        lambda1 = -1.0;
        alpha = rational::to_f64(&ae);
        oscillatory = beta_sq.is_positive();
        beta = if oscillatory {
            rational::to_f64(&beta_sq).sqrt()
        } else {
            0.0
        };
        alpha_exact = Some(ae);
    } else {
        match solve_cubic(&cf) {
            CubicRoots::OneReal { real, re, im } => {
                lambda1 = real;
                alpha = re;
                beta = im;
                oscillatory = im > 0.0;
            }
            CubicRoots::ThreeReal(r) => {
                lambda1 = r[0];
                alpha = (r[1] + r[2]) / 2.0;
                beta = 0.0;
                oscillatory = false;
            }
        }
    }
    let residual_p = eval_cubic_f64(&cf, lambda1).abs() / (1.0 + lambda1.abs().powi(3));
    let hopf_normalized = minus_one && oscillatory && alpha_exact.as_ref().is_some_and(Zero::is_zero);
    SpectrumReport {
        char_poly: cp,
        lambda1,
        alpha,
        beta,
        oscillatory,
        residual_p,
        residual_alpha: alpha.abs(),
        alpha_exact,
        minus_one_is_eigenvalue: minus_one,
        hopf_normalized,
    }
}

/// Variables of the closed forms.
pub const PARAM_NAMES: [&str; 4] = ["k3", "k4", "k5", "eps"];

const A_TEXT: &str = "-eps k4^3 + 8 eps k3 k4^3 + eps k4^4 - eps k3 k4 k5 + 2 k3 k4^2 k5 \
    + 2 eps k3 k4^2 k5 - 16 k3^2 k4^2 k5 - 8 eps k3^2 k4^2 k5 - 2 k3 k4^3 k5 - eps k3 k4^3 k5 \
    + eps k3^2 k5^2 - 2 k3^2 k4 k5^2 - eps k3^2 k4 k5^2";

const D_TEXT: &str = "-eps k4 + eps k4^2 + eps k3 k5 - 2 k3 k4 k5 - eps k3 k4 k5";

const B_TEXT: &str = "k5^2 (4 k3^2 k4^2 k5^2 (2 (1 + 8 k3) k4^3 + k4^4 \
    + k4^2 (-3 + 64 k3^2 - 2 k3 (-8 + k5)) + 2 (1 - 8 k3) k3 k4 k5 + k3^2 k5^2) \
    + eps^2 (k4^4 - k4^3 (1 + k3 (-8 + k5)) - 8 k3^2 k4^2 k5 - k3^2 k5^2 + k3 k4 k5 (1 + k3 k5))^2 \
    + 4 eps k3 k4 k5 (-k4^6 + k3 k4^5 (-16 + k5) - k3^3 k5^3 + k3^3 k4 k5^2 (8 + k5) \
    - k3 (-1 + 8 k3) k4^2 k5 (3 + 2 k3 k5) + k4^4 (3 + 16 k3^2 (-4 + k5) + 2 k3 k5) \
    + 2 k4^3 (-1 + k3 (8 - 3 k5) + 32 k3^3 k5 - k3^2 (-8 + k5) k5)))";

struct ClosedForms {
    a: QPoly,
    d: QPoly,
    b: QPoly,
}

fn closed_forms() -> &'static ClosedForms {
    static CELL: OnceLock<ClosedForms> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = |t: &str| QPoly::parse(t, &PARAM_NAMES).expect("closed-form text parses");
        ClosedForms {
            a: p(A_TEXT),
            d: p(D_TEXT),
            b: p(B_TEXT),
        }
    })
}

/// Numerator `a` of the real part.
pub fn alpha_numerator() -> &'static QPoly {
    &closed_forms().a
}

/// Common factor `D` of the denominators.
pub fn alpha_denominator_factor() -> &'static QPoly {
    &closed_forms().d
}

/// Radicand `b` of the imaginary part.
pub fn beta_radicand() -> &'static QPoly {
    &closed_forms().b
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaBeta {
    #[serde(serialize_with = "rational::serialize_exact")]
    pub alpha: Q,
    pub beta: f64,
    #[serde(serialize_with = "rational::serialize_decimal")]
    pub b: Q,
}

fn point(k3: &Q, k4: &Q, k5: &Q, eps: &Q) -> [Q; 4] {
    [k3.clone(), k4.clone(), k5.clone(), eps.clone()]
}

/// Closed forms of the pair `alpha ± i beta` valid when -1 is an eigenvalue:
/// `alpha = -a / (2 k4 D)` exactly and `beta = sqrt(-b) / |2 k4 k5 D|`.
pub fn alpha_beta(k3: &Q, k4: &Q, k5: &Q, eps: &Q) -> Result<AlphaBeta, SpectralError> {
    let cf = closed_forms();
    let pt = point(k3, k4, k5, eps);
    let d = cf.d.evaluate(&pt).expect("four variables");
    let den = int(2) * k4 * &d;
    if den.is_zero() {
        return Err(SpectralError::ZeroDenominator("alpha"));
    }
    let alpha = -cf.a.evaluate(&pt).expect("four variables") / &den;
    let b = cf.b.evaluate(&pt).expect("four variables");
    if !b.is_negative() {
        return Err(SpectralError::NonOscillatory(rational::to_f64(&b)));
    }
    let beta = (-rational::to_f64(&b)).sqrt() / rational::to_f64(&(&den * k5)).abs();
    Ok(AlphaBeta { alpha, beta, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Param {
    K3,
    K4,
    K5,
    Eps,
}

impl Param {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "k3" => Some(Param::K3),
            "k4" => Some(Param::K4),
            "k5" => Some(Param::K5),
            "eps" => Some(Param::Eps),
            _ => None,
        }
    }
}

/// Exact partial derivative of the closed-form real part with respect to
/// `which`, by the quotient rule.
pub fn transversality(k3: &Q, k4: &Q, k5: &Q, eps: &Q, which: Param) -> Result<Q, SpectralError> {
    let cf = closed_forms();
    let v = which.index();
    let pt = point(k3, k4, k5, eps);
    let num = -&cf.a;
    let den = (&QPoly::var(4, 1) * &cf.d).scale(&int(2));
    let ev = |p: &QPoly| p.evaluate(&pt).expect("four variables");
    let m = ev(&den);
    if m.is_zero() {
        return Err(SpectralError::ZeroDenominator("alpha derivative"));
    }
    let n = ev(&num);
    let dn = ev(&num.partial_derivative(v).expect("index in range"));
    let dm = ev(&den.partial_derivative(v).expect("index in range"));
    Ok((dn * &m - n * dm) / (&m * &m))
}

/// `sum` and `product` of eigenvalues implied by the characteristic
/// polynomial: trace and determinant of the matrix.
pub fn trace_det(cp: &[Q; 4]) -> (Q, Q) {
    let lead = -cp[3].clone();
    (&cp[2] / &lead, &cp[0] / &lead)
}

/// `true` when `u = -1` is a root.
pub fn has_minus_one(cp: &[Q; 4]) -> bool {
    eval_cubic(cp, &-Q::one()).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{k2_for_eigenvalue_minus_one, shift_to_equilibrium, ModelParams};
    use crate::rational::ratio;
    use crate::testutil;
    use nalgebra::Matrix3;

    fn jac(p: &ModelParams) -> [[Q; 3]; 3] {
        shift_to_equilibrium(p).unwrap().jacobian
    }

    fn params(k3: Q, k4: Q, k5: Q, eps: Option<Q>) -> ModelParams {
        ModelParams::with_overrides(k3, k4, k5, eps, None, None).unwrap()
    }

    #[test]
    fn diagonal_char_poly() {
        let mut a: [[Q; 3]; 3] = Default::default();
        for (i, v) in [-1, 2, 3].into_iter().enumerate() {
            a[i][i] = int(v);
        }
        let u = QPoly::var(1, 0);
        let c = |v: i64| QPoly::constant(1, int(v));
        let want = &(&(&c(-1) - &u) * &(&c(2) - &u)) * &(&c(3) - &u);
        let cp = char_poly(&a);
        for (i, q) in cp.iter().enumerate() {
            assert_eq!(*q, want.coeff(&[i as u16]));
        }
    }

    #[test]
    fn matches_printed_polynomial() {
        let names = ["k2", "k3", "k4", "k5", "eps", "u"];
        let printed = QPoly::parse(
            "2 k2 k3 k4 k5 + eps k2 k3 k4 k5 + eps k2 k4^2 u + eps k2 k3 k5 u + 8 k3^2 k5 u \
             + k3 k4 k5 u + eps k2 k4 u^2 + 8 k3 k4 u^2 + k4^2 u^2 + k3 k5 u^2 + k4 u^3",
            &names,
        )
        .unwrap();
        let mut rng = testutil::rng(11);
        for _ in 0..10 {
            let (k3, k4, k5) = testutil::region_point(&mut rng);
            let p = params(k3, k4, k5, None);
            let cp = char_poly(&jac(&p));
            for (i, c) in cp.iter().enumerate() {
                let coeff_poly: QPoly = QPoly::from_terms(
                    6,
                    printed
                        .terms()
                        .filter(|(m, _)| m.exponents()[5] == i as u16)
                        .map(|(m, c)| {
                            let mut ex = m.exponents().to_vec();
                            ex[5] = 0;
                            (crate::Monomial::new(&ex), c.clone())
                        }),
                );
                let pt = [
                    p.k2.clone(),
                    p.k3.clone(),
                    p.k4.clone(),
                    p.k5.clone(),
                    p.eps.clone(),
                    int(0),
                ];
                let printed_c = -coeff_poly.evaluate(&pt).unwrap() / &p.k4;
                assert_eq!(*c, printed_c, "u^{i}");
            }
        }
    }

    #[test]
    fn normalization_chain_is_exact() {
        let mut rng = testutil::rng(12);
        for _ in 0..10 {
            let (k3, k4, k5) = testutil::region_point(&mut rng);
            let p = ModelParams::hopf_normalized(k3.clone(), k4.clone(), k5.clone()).unwrap();
            let s = spectrum(&jac(&p));
            assert!(s.minus_one_is_eigenvalue);
            assert!(s.hopf_normalized);
            assert!(alpha_beta(&k3, &k4, &k5, &p.eps).unwrap().alpha.is_zero());
            assert!(s.beta > 0.0);
        }
    }

    #[test]
    fn kstar_and_kstarstar() {
        let (k3, k4, k5) = (ratio(1, 10), ratio(1, 10), ratio(13, 200));
        let ab = alpha_beta(&k3, &k4, &k5, &ratio(71041, 10_000_000)).unwrap();
        assert!(rational::to_f64(&ab.alpha).abs() < 1e-8);
        let ab2 = alpha_beta(&k3, &k4, &k5, &ratio(72041, 10_000_000)).unwrap();
        assert!(ab2.alpha.is_negative());
        let d = transversality(&k3, &k4, &k5, &ratio(71041, 10_000_000), Param::K4).unwrap();
        assert!(!d.is_zero());
    }

    #[test]
    fn closed_form_matches_numerical_eigenvalues() {
        let mut rng = testutil::rng(13);
        for i in 0..20 {
            let (k3, k4, k5) = testutil::region_point(&mut rng);
            let hopf = crate::model::epsilon_for_hopf(&k3, &k4, &k5).unwrap();
            let eps = &hopf * ratio(80 + 2 * i, 100);
            let p = params(k3.clone(), k4.clone(), k5.clone(), Some(eps.clone()));
            let a = jac(&p);
            let m = Matrix3::from_fn(|r, c| rational::to_f64(&a[r][c]));
            let ev = m.complex_eigenvalues();
            let pair = ev.iter().find(|z| z.im > 0.0).expect("complex pair");
            let Ok(ab) = alpha_beta(&k3, &k4, &k5, &eps) else {
                continue;
            };
            let scale = 1.0 + pair.norm();
            assert!((rational::to_f64(&ab.alpha) - pair.re).abs() < 1e-10 * scale);
            assert!((ab.beta - pair.im).abs() < 1e-10 * scale);
            let s = spectrum(&a);
            assert!((s.alpha - pair.re).abs() < 1e-10 * scale);
            assert!((s.beta - pair.im).abs() < 1e-10 * scale);
            assert!(ev.iter().any(|z| (z.re + 1.0).abs() < 1e-10 && z.im.abs() < 1e-10));
        }
    }

    #[test]
    fn cubic_solver_against_companion_matrix() {
        let mut rng = testutil::rng(14);
        use rand::Rng;
        for _ in 0..200 {
            let c: [f64; 4] = [
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(0.5..3.0),
            ];
            let comp = Matrix3::new(0.0, 0.0, -c[0] / c[3], 1.0, 0.0, -c[1] / c[3], 0.0, 1.0, -c[2] / c[3]);
            let ev = comp.complex_eigenvalues();
            match solve_cubic(&c) {
                CubicRoots::OneReal { real, re, im } => {
                    assert!(eval_cubic_f64(&c, real).abs() / (1.0 + real.abs().powi(3)) < 1e-10);
                    assert!(ev
                        .iter()
                        .any(|z| (z.re - re).abs() < 1e-6 && (z.im.abs() - im).abs() < 1e-6));
                }
                CubicRoots::ThreeReal(r) => {
                    for x in r {
                        assert!(eval_cubic_f64(&c, x).abs() / (1.0 + x.abs().powi(3)) < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn trace_and_determinant_identities() {
        let mut rng = testutil::rng(15);
        for _ in 0..10 {
            let (k3, k4, k5) = testutil::region_point(&mut rng);
            let p = params(k3, k4, k5, None);
            let a = jac(&p);
            let cp = char_poly(&a);
            let (tr, det) = trace_det(&cp);
            assert_eq!(tr, &a[0][0] + &a[1][1] + &a[2][2]);
            let s = spectrum(&a);
            let sum = s.lambda1 + 2.0 * s.alpha;
            let prod = s.lambda1 * (s.alpha * s.alpha + s.beta * s.beta);
            assert!((sum - rational::to_f64(&tr)).abs() < 1e-10 * (1.0 + sum.abs()));
            assert!((prod - rational::to_f64(&det)).abs() < 1e-10 * (1.0 + prod.abs()));
        }
    }

    #[test]
    fn beta_squared_matches_radicand() {
        let mut rng = testutil::rng(16);
        for _ in 0..10 {
            let (k3, k4, k5) = testutil::region_point(&mut rng);
            let eps = crate::model::epsilon_for_hopf(&k3, &k4, &k5).unwrap() * ratio(9, 10);
            let p = params(k3.clone(), k4.clone(), k5.clone(), Some(eps.clone()));
            let cp = char_poly(&jac(&p));
            let d2 = cp[3].clone();
            let d1 = &cp[2] - &cp[3];
            let alpha = -(&d1 / (int(2) * &d2));
            let beta_sq = &cp[0] / &d2 - &alpha * &alpha;
            let pt = point(&k3, &k4, &k5, &eps);
            let den = int(2) * &k4 * &k5 * alpha_denominator_factor().evaluate(&pt).unwrap();
            let closed = -beta_radicand().evaluate(&pt).unwrap() / (&den * &den);
            assert_eq!(beta_sq, closed);
        }
    }

    #[test]
    fn minus_one_root_under_k2_condition() {
        let mut rng = testutil::rng(17);
        for _ in 0..10 {
            let (k3, k4, k5) = testutil::region_point(&mut rng);
            let eps = ratio(1, 100);
            let k2 = k2_for_eigenvalue_minus_one(&k3, &k4, &k5, &eps).unwrap();
            let p = ModelParams::with_overrides(k3, k4, k5, Some(eps), Some(k2), None);
            if let Ok(p) = p {
                assert!(has_minus_one(&char_poly(&jac(&p))));
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = testutil::rng(18);
        for _ in 0..10 {
            let (k3, k4, k5) = testutil::region_point(&mut rng);
            let eps = crate::model::epsilon_for_hopf(&k3, &k4, &k5).unwrap();
            let f = |dk3: f64, de: f64| {
                let e = &eps + rational::from_f64_decimal(de, 15);
                let a = &k3 + rational::from_f64_decimal(dk3, 15);
                let cf = closed_forms();
                let pt = point(&a, &k4, &k5, &e);
                let den = int(2) * &k4 * cf.d.evaluate(&pt).unwrap();
                rational::to_f64(&(-cf.a.evaluate(&pt).unwrap() / den))
            };
            let h = 1e-7 * rational::to_f64(&k3);
            let fd = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
            let exact = rational::to_f64(&transversality(&k3, &k4, &k5, &eps, Param::K3).unwrap());
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-12), "{fd} vs {exact}");
            let he = 1e-6 * rational::to_f64(&eps);
            let fde = (f(0.0, he) - f(0.0, -he)) / (2.0 * he);
            let exe = rational::to_f64(&transversality(&k3, &k4, &k5, &eps, Param::Eps).unwrap());
            assert!((fde - exe).abs() <= 1e-4 * exe.abs());
        }
    }
}

//! The dimensionless calcium model, its normalization conditions, the shift
//! of the equilibrium to the origin and the Taylor truncation of the
//! non-polynomial extrusion term.
//!
//! ```text
//! X' = k1 - X Z
//! Y' = X - 4 k3 Y^2 + (4 k4 / k5) Z - k2 Y^eps
//! Z' = k3 k5 Y^2 - k4 Z
//! ```

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::netparse::{MassActionOdes, Order, EPS};
use crate::poly::{QPoly, XYZ};
use crate::rational::{self, int, Q};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: String },
    #[error("singular normalization: {0} has a zero denominator")]
    SingularNormalization(&'static str),
    #[error("k1 does not place the equilibrium on the plane Y = 1")]
    NotUnitEquilibrium,
    #[error("truncation order must be at least 2, got {0}")]
    TruncationOrder(u32),
    #[error("network does not have the calcium-model structure: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Normalization {
    /// `k1 = k2 k3 k5 / k4`.
    pub unit_equilibrium: bool,
    /// One eigenvalue equals -1 and the complex pair is purely imaginary.
    pub hopf_normalized: bool,
}

/// Parameters of the dimensionless model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub k1: Q,
    pub k2: Q,
    pub k3: Q,
    pub k4: Q,
    pub k5: Q,
    pub eps: Q,
    pub flags: Normalization,
}

fn positive(name: &'static str, v: &Q) -> Result<(), ModelError> {
    if v.is_positive() {
        Ok(())
    } else {
        Err(ModelError::NonPositive {
            name,
            value: rational::to_decimal_string(v, 12),
        })
    }
}

/// Maps the raw rates `K1..K6` to `k1..k5`: `k1 = K1 K2`, `k2 = K6`,
/// `k3 = K3`, `k4 = K4`, `k5 = K5`.
pub fn nondimensionalize(raw: &[Q; 6], eps: &Q) -> Result<ModelParams, ModelError> {
    const NAMES: [&str; 6] = ["K1", "K2", "K3", "K4", "K5", "K6"];
    for (n, v) in NAMES.iter().zip(raw) {
        positive(n, v)?;
    }
    positive("eps", eps)?;
    let p = ModelParams {
        k1: &raw[0] * &raw[1],
        k2: raw[5].clone(),
        k3: raw[2].clone(),
        k4: raw[3].clone(),
        k5: raw[4].clone(),
        eps: eps.clone(),
        flags: Normalization::default(),
    };
    Ok(p.with_detected_flags())
}

/// `k1 = k2 k3 k5 / k4`.
pub fn k1_for_unit_equilibrium(k2: &Q, k3: &Q, k4: &Q, k5: &Q) -> Q {
    k2 * k3 * k5 / k4
}

/// The `k2` for which -1 is an eigenvalue of the linearization.
pub fn k2_for_eigenvalue_minus_one(k3: &Q, k4: &Q, k5: &Q, eps: &Q) -> Result<Q, ModelError> {
    let one = Q::one();
    let num = (int(-1) + int(8) * k3 + k4) * (k3 * k5 - k4);
    let den = int(2) * k3 * k4 * k5 - eps * (k4 - &one) * (k4 - k3 * k5);
    if den.is_zero() {
        return Err(ModelError::SingularNormalization("k2"));
    }
    Ok(num / den)
}

/// The `eps` for which the complex pair is purely imaginary, given the
/// eigenvalue -1.
pub fn epsilon_for_hopf(k3: &Q, k4: &Q, k5: &Q) -> Result<Q, ModelError> {
    let k4sq = k4 * k4;
    let num = int(-2) * k3 * k4 * k5 * (-k4 + int(8) * k3 * k4 + &k4sq + k3 * k5);
    let den = (k3 * k5 - k4) * (-&k4sq + int(8) * k3 * &k4sq + &k4sq * k4 - k3 * k5 + k3 * k4 * k5);
    if den.is_zero() {
        return Err(ModelError::SingularNormalization("eps"));
    }
    Ok(num / den)
}

impl ModelParams {
    /// Imposes all three normalizations from the free parameters.
    pub fn hopf_normalized(k3: Q, k4: Q, k5: Q) -> Result<Self, ModelError> {
        let eps = epsilon_for_hopf(&k3, &k4, &k5)?;
        Self::with_overrides(k3, k4, k5, Some(eps), None, None)
    }

    /// Derives `k2` from (`k3`, `k4`, `k5`, `eps`) and `k1` from the unit
    /// equilibrium unless they are given. Without `eps`, the Hopf value is used.
    pub fn with_overrides(
        k3: Q,
        k4: Q,
        k5: Q,
        eps: Option<Q>,
        k2: Option<Q>,
        k1: Option<Q>,
    ) -> Result<Self, ModelError> {
        positive("k3", &k3)?;
        positive("k4", &k4)?;
        positive("k5", &k5)?;
        let eps = match eps {
            Some(e) => e,
            None => epsilon_for_hopf(&k3, &k4, &k5)?,
        };
        positive("eps", &eps)?;
        let k2 = match k2 {
            Some(v) => v,
            None => k2_for_eigenvalue_minus_one(&k3, &k4, &k5, &eps)?,
        };
        positive("k2", &k2)?;
        let k1 = k1.unwrap_or_else(|| k1_for_unit_equilibrium(&k2, &k3, &k4, &k5));
        positive("k1", &k1)?;
        Ok(ModelParams {
            k1,
            k2,
            k3,
            k4,
            k5,
            eps,
            flags: Normalization::default(),
        }
        .with_detected_flags())
    }

    /// Recomputes the normalization flags by exact comparison.
    pub fn with_detected_flags(mut self) -> Self {
        let unit = self.k1 == k1_for_unit_equilibrium(&self.k2, &self.k3, &self.k4, &self.k5);
        let k2_ok = k2_for_eigenvalue_minus_one(&self.k3, &self.k4, &self.k5, &self.eps).is_ok_and(|k2| k2 == self.k2);
        let eps_ok = epsilon_for_hopf(&self.k3, &self.k4, &self.k5).is_ok_and(|e| e == self.eps);
        self.flags = Normalization {
            unit_equilibrium: unit,
            hopf_normalized: k2_ok && eps_ok,
        };
        self
    }

    /// Raw rates realizing these parameters, with `K2 = 1`.
    pub fn lift(&self) -> [Q; 6] {
        [
            self.k1.clone(),
            Q::one(),
            self.k3.clone(),
            self.k4.clone(),
            self.k5.clone(),
            self.k2.clone(),
        ]
    }

    /// The equilibrium `(k2, 1, k3 k5 / k4)` of the unit-equilibrium model.
    pub fn equilibrium(&self) -> [Q; 3] {
        [self.k2.clone(), Q::one(), &self.k3 * &self.k5 / &self.k4]
    }

    pub fn to_f64(&self) -> ParamsF64 {
        let f = rational::to_f64;
        ParamsF64 {
            k1: f(&self.k1),
            k2: f(&self.k2),
            k3: f(&self.k3),
            k4: f(&self.k4),
            k5: f(&self.k5),
            eps: f(&self.eps),
        }
    }

    /// Right-hand side of the model with all terms polynomial except `Y^eps`,
    /// evaluated exactly at a point with `Y = 1`.
    pub fn rhs_exact_on_unit_plane(&self, x: &Q, z: &Q) -> [Q; 3] {
        let y = Q::one();
        [
            &self.k1 - x * z,
            x - int(4) * &self.k3 * &y * &y + int(4) * &self.k4 / &self.k5 * z - &self.k2,
            &self.k3 * &self.k5 - &self.k4 * z,
        ]
    }

    pub fn region(&self) -> RegionReport {
        center_region_check(&self.k3, &self.k4, &self.k5)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = |q: &Q| rational::to_decimal_string(q, 12);
        write!(
            f,
            "k1={} k2={} k3={} k4={} k5={} eps={}",
            d(&self.k1),
            d(&self.k2),
            d(&self.k3),
            d(&self.k4),
            d(&self.k5),
            d(&self.eps)
        )
    }
}

/// Binary64 copy of [`ModelParams`] used by the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamsF64 {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub eps: f64,
}

impl ParamsF64 {
    /// The model vector field; `Y` must be positive.
    pub fn rhs(&self, s: &[f64; 3]) -> [f64; 3] {
        let [x, y, z] = *s;
        [
            self.k1 - x * z,
            x - 4.0 * self.k3 * y * y + 4.0 * self.k4 / self.k5 * z - self.k2 * y.powf(self.eps),
            self.k3 * self.k5 * y * y - self.k4 * z,
        ]
    }

    pub fn equilibrium(&self) -> [f64; 3] {
        [self.k2, 1.0, self.k3 * self.k5 / self.k4]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub label: &'static str,
    /// Right side minus left side of the strict inequality.
    #[serde(serialize_with = "crate::rational::serialize_decimal")]
    pub slack: Q,
    pub holds: bool,
    pub on_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub inside: bool,
    pub on_boundary: bool,
    pub checks: Vec<InequalityCheck>,
}

impl fmt::Display for RegionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let state = if c.holds {
                "holds"
            } else if c.on_boundary {
                "fails (on boundary)"
            } else {
                "fails"
            };
            writeln!(f, "  {:<28} {state}", c.label)?;
        }
        let verdict = match (self.inside, self.on_boundary) {
            (true, _) => "inside",
            (false, true) => "outside (on boundary)",
            (false, false) => "outside",
        };
        write!(f, "  region: {verdict}")
    }
}

/// Exact test of the region where a center manifold carries a center or a
/// focus: `k3, k4, k5 > 0`, `8 k3 < 1`, `8 k3 + k4 < 1` and
/// `8 k3 k4 + k3 k5 + k4^2 < k4`.
pub fn center_region_check(k3: &Q, k4: &Q, k5: &Q) -> RegionReport {
    let one = Q::one();
    let slacks: [(&'static str, Q); 6] = [
        ("k3 > 0", k3.clone()),
        ("k4 > 0", k4.clone()),
        ("k5 > 0", k5.clone()),
        ("8 k3 < 1", &one - int(8) * k3),
        ("8 k3 + k4 < 1", &one - int(8) * k3 - k4),
        ("8 k3 k4 + k3 k5 + k4^2 < k4", k4 - int(8) * k3 * k4 - k3 * k5 - k4 * k4),
    ];
    let checks: Vec<InequalityCheck> = slacks
        .into_iter()
        .map(|(label, slack)| InequalityCheck {
            label,
            holds: slack.is_positive(),
            on_boundary: slack.is_zero(),
            slack,
        })
        .collect();
    let inside = checks.iter().all(|c| c.holds);
    let on_boundary = !inside && checks.iter().all(|c| c.holds || c.on_boundary);
    RegionReport {
        inside,
        on_boundary,
        checks,
    }
}

/// Generalized binomial coefficient `e (e-1) ... (e-j+1) / j!`.
pub fn binomial(e: &Q, j: u32) -> Q {
    let mut r = Q::one();
    for t in 0..j {
        r = r * (e - int(t as i64)) / int(t as i64 + 1);
    }
    r
}

/// The model with the equilibrium moved to the origin. The `Y` equation is
/// `poly[1] - k2 (1 + y)^eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSystem {
    pub params: ModelParams,
    pub poly: [QPoly; 3],
    pub jacobian: [[Q; 3]; 3],
    pub nonpolynomial: bool,
}

pub fn shift_to_equilibrium(p: &ModelParams) -> Result<ShiftedSystem, ModelError> {
    if p.k1 != k1_for_unit_equilibrium(&p.k2, &p.k3, &p.k4, &p.k5) {
        return Err(ModelError::NotUnitEquilibrium);
    }
    let x = QPoly::var(3, 0);
    let y = QPoly::var(3, 1);
    let z = QPoly::var(3, 2);
    let c = |q: Q| QPoly::constant(3, q);
    let ze = &p.k3 * &p.k5 / &p.k4;
    let g1 = &(&x.scale(&-ze.clone()) - &z.scale(&p.k2)) - &(&x * &z);
    let g2 = &(&(&(&c(p.k2.clone()) + &x) - &y.scale(&(int(8) * &p.k3))) - &(&y * &y).scale(&(int(4) * &p.k3)))
        + &z.scale(&(int(4) * &p.k4 / &p.k5));
    let g3 = &(&y.scale(&(int(2) * &p.k3 * &p.k5)) - &z.scale(&p.k4)) + &(&y * &y).scale(&(&p.k3 * &p.k5));
    let mut jacobian: [[Q; 3]; 3] = Default::default();
    for (i, g) in [&g1, &g2, &g3].into_iter().enumerate() {
        for (j, row) in jacobian[i].iter_mut().enumerate() {
            let mut e = [0u16; 3];
            e[j] = 1;
            *row = g.coeff(&e);
        }
    }
    jacobian[1][1] -= &p.eps * &p.k2;
    Ok(ShiftedSystem {
        params: p.clone(),
        poly: [g1, g2, g3],
        jacobian,
        nonpolynomial: !rational::is_integer(&p.eps) || p.eps.is_negative(),
    })
}

impl ShiftedSystem {
    /// The vector field in binary64 at `(x, y, z)`, `y > -1`.
    pub fn rates_f64(&self, s: &[f64; 3]) -> [f64; 3] {
        let k2 = rational::to_f64(&self.params.k2);
        let eps = rational::to_f64(&self.params.eps);
        let mut out = [0.0; 3];
        for (o, g) in out.iter_mut().zip(&self.poly) {
            *o = g.to_f64().evaluate(s).unwrap_or(f64::NAN);
        }
        out[1] -= k2 * (1.0 + s[1]).powf(eps);
        out
    }

    /// Replaces `(1 + y)^eps` by its binomial series through degree `order`.
    pub fn truncate(&self, order: u32) -> Result<TruncatedSystem, ModelError> {
        taylor_truncate(self, order)
    }
}

/// Polynomial approximation of a [`ShiftedSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSystem {
    pub order: u32,
    pub eqs: [QPoly; 3],
}

impl TruncatedSystem {
    pub fn to_f64(&self) -> [crate::FPoly; 3] {
        [self.eqs[0].to_f64(), self.eqs[1].to_f64(), self.eqs[2].to_f64()]
    }
}

impl fmt::Display for TruncatedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, g) in ["x", "y", "z"].iter().zip(&self.eqs) {
            writeln!(f, "d{name}/dt = {}", g.display(&XYZ))?;
        }
        Ok(())
    }
}

pub fn taylor_truncate(s: &ShiftedSystem, order: u32) -> Result<TruncatedSystem, ModelError> {
    if order < 2 {
        return Err(ModelError::TruncationOrder(order));
    }
    let k2 = &s.params.k2;
    let mut g2 = s.poly[1].clone();
    for j in 0..=order {
        let c = -(k2 * binomial(&s.params.eps, j));
        if !c.is_zero() {
            g2.add_term(crate::Monomial::new(&[0, j as u16, 0]), c);
        }
    }
    Ok(TruncatedSystem {
        order,
        eqs: [s.poly[0].clone(), g2, s.poly[2].clone()],
    })
}

/// Checks that generated network rates have the structure of the calcium
/// model: three species, six rates, the eps-order sink on the second species.
pub fn check_osn_structure(odes: &MassActionOdes) -> Result<(), ModelError> {
    if odes.species.len() != 3 || odes.rates.len() != 6 {
        return Err(ModelError::Structure(format!(
            "expected 3 species and 6 reactions, found {} and {}",
            odes.species.len(),
            odes.rates.len()
        )));
    }
    let names = odes.variable_names();
    let [a1, a2, a3] = [0, 1, 2].map(|i| names[i]);
    let [r1, r2, r3, r4, r5, _] = [3, 4, 5, 6, 7, 8].map(|i| names[i]);
    let expected = [
        format!("{r1} - {r5} {a1} {a3}"),
        format!("{r2} {a1} - 4 {r3} {a2}^2 + 4 {r4} {a3}"),
        format!("{r3} {a2}^2 - {r4} {a3}"),
    ];
    for (i, (eq, text)) in odes.equations.iter().zip(&expected).enumerate() {
        let want = QPoly::parse(text, &names).map_err(|e| ModelError::Structure(e.to_string()))?;
        if eq.polynomial != want {
            return Err(ModelError::Structure(format!(
                "rate of {} is {}, expected {}",
                odes.species[i],
                eq.polynomial.display(&names),
                want.display(&names)
            )));
        }
    }
    let sink_ok = odes.equations[0].power_terms.is_empty()
        && odes.equations[2].power_terms.is_empty()
        && match odes.equations[1].power_terms.as_slice() {
            [t] => {
                t.rate == 5
                    && t.coeff == int(-1)
                    && t.monomial.degree() == 0
                    && t.powers == [(1, Order::Symbol(EPS.into()))]
            }
            _ => false,
        };
    if !sink_ok {
        return Err(ModelError::Structure(format!(
            "expected a single sink {} {}^eps on {}",
            odes.rates[5], odes.species[1], odes.species[1]
        )));
    }
    Ok(())
}

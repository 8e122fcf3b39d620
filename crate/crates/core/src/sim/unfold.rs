//! Two-step unfolding of the degenerate Hopf point: first `k5` so that a
//! small positive `g1` faces a negative `g2`, then `eps` so that a small
//! negative `alpha` faces `g1`.

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::SimError;
use crate::focus::{self, FreePolicy};
use crate::model::{self, ModelParams};
use crate::rational::{self, int, Q};
use crate::spectral::{self, Param};

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldOptions {
    /// `g1 = factor_g1 |g2|` after step one.
    pub factor_g1: f64,
    /// `alpha = -factor_alpha |g1|` after step two.
    pub factor_alpha: f64,
    /// Search interval for the root of `g1` in `k5`.
    pub k5_interval: (Q, Q),
    pub root_width: Q,
    /// Half-width of the difference quotient for `dg1/dk5`.
    pub derivative_step: Q,
    /// Significant digits kept in perturbed parameters.
    pub digits: u32,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            factor_g1: 1e-2,
            factor_alpha: 1e-2,
            k5_interval: (rational::ratio(1, 10_000), rational::ratio(999, 10_000)),
            root_width: focus::default_root_width(),
            derivative_step: rational::ratio(1, 1_000_000),
            digits: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnfoldStep {
    pub label: &'static str,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub k1: Q,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub k2: Q,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub k3: Q,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub k4: Q,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub k5: Q,
    #[serde(serialize_with = "rational::serialize_exact")]
    pub eps: Q,
    /// Real part of the complex pair from the closed form.
    pub alpha_closed_form: f64,
    /// Real part of the complex pair of the actual Jacobian.
    pub alpha: f64,
    pub g1: f64,
    pub g2: f64,
    pub region_inside: bool,
    /// `alpha <= 0`, `g1 >= 0`, `g2 < 0` with strictness matching the step.
    pub signs_ok: bool,
}

impl UnfoldStep {
    pub fn params(&self) -> Result<ModelParams, SimError> {
        Ok(ModelParams::with_overrides(
            self.k3.clone(),
            self.k4.clone(),
            self.k5.clone(),
            Some(self.eps.clone()),
            Some(self.k2.clone()),
            Some(self.k1.clone()),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnfoldSchedule {
    pub bracket: focus::RootBracket,
    pub dg1_dk5: f64,
    pub dalpha_deps: f64,
    pub steps: Vec<UnfoldStep>,
}

fn region(k3: &Q, k4: &Q, k5: &Q) -> Result<(), SimError> {
    let r = model::center_region_check(k3, k4, k5);
    match r.checks.iter().find(|c| !c.holds) {
        Some(c) => Err(SimError::Region(c.label.to_string())),
        None => Ok(()),
    }
}

fn g12(k3: &Q, k4: &Q, k5: &Q) -> Result<(Q, Q), SimError> {
    let p = ModelParams::hopf_normalized(k3.clone(), k4.clone(), k5.clone())?;
    let f = focus::model_focus(&p, 2, None, &FreePolicy::default())?;
    Ok((f.quantities.g[0].clone(), f.quantities.g[1].clone()))
}

fn spectral_alpha(p: &ModelParams) -> Result<f64, SimError> {
    Ok(spectral::spectrum(&model::shift_to_equilibrium(p)?.jacobian).alpha)
}

fn step(label: &'static str, p: &ModelParams, g1: &Q, g2: &Q, strict: [bool; 2]) -> Result<UnfoldStep, SimError> {
    let ab = spectral::alpha_beta(&p.k3, &p.k4, &p.k5, &p.eps).map_err(|e| SimError::Unfold(e.to_string()))?;
    let alpha = spectral_alpha(p)?;
    let alpha_ok = if strict[0] { alpha < 0.0 } else { ab.alpha.is_zero() };
    let g1_ok = if strict[1] {
        g1.is_positive()
    } else {
        !g1.is_negative() || g1.abs() < rational::ratio(1, 1_000_000)
    };
    Ok(UnfoldStep {
        label,
        k1: p.k1.clone(),
        k2: p.k2.clone(),
        k3: p.k3.clone(),
        k4: p.k4.clone(),
        k5: p.k5.clone(),
        eps: p.eps.clone(),
        alpha_closed_form: rational::to_f64(&ab.alpha),
        alpha,
        g1: rational::to_f64(g1),
        g2: rational::to_f64(g2),
        region_inside: model::center_region_check(&p.k3, &p.k4, &p.k5).inside,
        signs_ok: alpha_ok && g1_ok && g2.is_negative(),
    })
}

/// Bautin point in `k5` for fixed `(k3, k4)`, then the two perturbations.
pub fn unfold_bautin(k3: &Q, k4: &Q, opts: &UnfoldOptions) -> Result<UnfoldSchedule, SimError> {
    let (lo, hi) = &opts.k5_interval;
    let bracket = focus::g1_root_bisect(k3, k4, lo, hi, &opts.root_width)?;
    let k5_bar = bracket.midpoint();
    region(k3, k4, &k5_bar)?;
    let (g1_bar, g2_bar) = g12(k3, k4, &k5_bar)?;
    if !g2_bar.is_negative() {
        return Err(SimError::Unfold(format!(
            "g2 = {} at the root of g1 is not negative",
            rational::to_f64(&g2_bar)
        )));
    }
    let bautin = ModelParams::hopf_normalized(k3.clone(), k4.clone(), k5_bar.clone())?;
    let mut steps = vec![step("bautin", &bautin, &g1_bar, &g2_bar, [false, false])?];

    let h = &opts.derivative_step;
    let g1_plus = focus::g1_procedure(k3, k4, &(&k5_bar + h))?;
    let g1_minus = focus::g1_procedure(k3, k4, &(&k5_bar - h))?;
    let slope = (g1_plus - g1_minus) / (int(2) * h);
    let dg1 = rational::to_f64(&slope);
    if slope.is_zero() {
        return Err(SimError::Unfold("g1 is stationary at its root".into()));
    }
    let dk5 = opts.factor_g1 * rational::to_f64(&g2_bar).abs() / dg1;
    let k5 = &k5_bar + rational::from_f64_decimal(dk5, opts.digits);
    region(k3, k4, &k5)?;
    let (g1, g2) = g12(k3, k4, &k5)?;
    let one = ModelParams::hopf_normalized(k3.clone(), k4.clone(), k5.clone())?;
    let strict = opts.factor_g1 != 0.0;
    steps.push(step("stable_cycle", &one, &g1, &g2, [false, strict])?);

    let da =
        spectral::transversality(k3, k4, &k5, &one.eps, Param::Eps).map_err(|e| SimError::Unfold(e.to_string()))?;
    let da_f = rational::to_f64(&da);
    if da.is_zero() {
        return Err(SimError::Unfold("alpha is stationary in eps".into()));
    }
    let deps = -opts.factor_alpha * rational::to_f64(&g1).abs() / da_f;
    let eps = &one.eps + rational::from_f64_decimal(deps, opts.digits);
    let two = ModelParams::with_overrides(
        k3.clone(),
        k4.clone(),
        k5.clone(),
        Some(eps),
        Some(one.k2.clone()),
        Some(one.k1.clone()),
    )?;
    let strict_alpha = opts.factor_alpha != 0.0 && strict;
    steps.push(step("two_cycles", &two, &g1, &g2, [strict_alpha, strict])?);

    Ok(UnfoldSchedule {
        bracket,
        dg1_dk5: dg1,
        dalpha_deps: da_f,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn schedule_signs_and_direction() {
        let k = ratio(1, 10);
        let s = unfold_bautin(&k, &k, &UnfoldOptions::default()).unwrap();
        assert_eq!(s.steps.len(), 3);
        assert!(
            s.steps.iter().all(|st| st.signs_ok && st.region_inside),
            "{:#?}",
            s.steps
        );
        let (one, two) = (&s.steps[1], &s.steps[2]);
        assert!(one.g1 > 0.0 && one.g2 < 0.0);
        assert!(two.alpha < 0.0 && two.alpha.abs() < one.g1 && one.g1 < one.g2.abs());
        assert_eq!(two.k2, one.k2);
        assert!(two.eps > one.eps);
    }

    #[test]
    fn zero_factors_return_bautin_point() {
        let k = ratio(1, 10);
        let opts = UnfoldOptions {
            factor_g1: 0.0,
            factor_alpha: 0.0,
            ..Default::default()
        };
        let s = unfold_bautin(&k, &k, &opts).unwrap();
        for st in &s.steps {
            assert_eq!(st.k5, s.steps[0].k5);
            assert_eq!(st.eps, s.steps[0].eps);
            assert_eq!(st.alpha_closed_form, 0.0);
            assert!(st.g1.abs() < 1e-6);
        }
    }
}

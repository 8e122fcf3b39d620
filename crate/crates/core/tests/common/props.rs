//! Property bodies shared by the proptest suite and the acceptance runner.

use std::collections::BTreeMap;

use cyclia::focus::{self, FocusState, FreePolicy};
use cyclia::model::{self, ModelParams};
use cyclia::netparse::{mass_action_odes, parse_network};
use cyclia::poly::XYZ;
use cyclia::rational::{self, int, ratio, Q};
use cyclia::spectral;
use cyclia::{Monomial, QPoly};
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

pub fn coeff() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| ratio(n, d))
}

pub fn poly(max_degree: u16, max_terms: usize) -> impl Strategy<Value = QPoly> {
    let exps = (0..=max_degree, 0..=max_degree, 0..=max_degree)
        .prop_filter("degree bound", move |(a, b, c)| a + b + c <= max_degree);
    prop::collection::vec((exps, coeff()), 0..max_terms).prop_map(|terms| {
        let mut p = QPoly::zero(3);
        for ((a, b, c), q) in terms {
            p.add_term(Monomial::new(&[a, b, c]), q);
        }
        p
    })
}

/// No constant or linear part.
pub fn nonlinear(max_degree: u16) -> impl Strategy<Value = QPoly> {
    poly(max_degree, 6).prop_map(|p| &(&p - &p.graded_part(0).poly) - &p.graded_part(1).poly)
}

pub fn without_constant(max_degree: u16) -> impl Strategy<Value = QPoly> {
    poly(max_degree, 6).prop_map(|p| &p - &p.graded_part(0).poly)
}

fn no_stored_zero(p: &QPoly) -> bool {
    p.terms().all(|(_, c)| !c.is_zero())
}

pub fn ring_axioms(p: &QPoly, q: &QPoly, r: &QPoly) -> Check {
    prop_assert_eq!(&(p + q) + r, p + &(q + r));
    prop_assert_eq!(&(p * q) * r, p * &(q * r));
    prop_assert_eq!(p + q, q + p);
    prop_assert_eq!(p * q, q * p);
    prop_assert_eq!(p * &(q + r), &(p * q) + &(p * r));
    prop_assert!((p + &-p).is_zero());
    prop_assert_eq!(p * &QPoly::one(3), p.clone());
    Ok(())
}

pub fn no_zero_coefficients(p: &QPoly, q: &QPoly) -> Check {
    for r in [p + q, p - q, p * q, p - &q.scale(&int(0))] {
        prop_assert!(no_stored_zero(&r));
    }
    for v in 0..3 {
        prop_assert!(no_stored_zero(&p.partial_derivative(v).unwrap()));
    }
    Ok(())
}

pub fn leibniz(p: &QPoly, q: &QPoly) -> Check {
    for v in 0..3 {
        let lhs = (p * q).partial_derivative(v).unwrap();
        let rhs = &(p * &q.partial_derivative(v).unwrap()) + &(q * &p.partial_derivative(v).unwrap());
        prop_assert_eq!(lhs, rhs);
    }
    Ok(())
}

pub fn float_evaluation(p: &QPoly, point: &[Q; 3]) -> Check {
    let exact = rational::to_f64(&p.evaluate(point).unwrap());
    let pt = point.each_ref().map(rational::to_f64);
    let float = p.to_f64().evaluate(&pt).unwrap();
    let scale: f64 = p
        .terms()
        .map(|(m, c)| {
            let mut t = rational::to_f64(c).abs();
            for (e, v) in m.exponents().iter().zip(&pt) {
                t *= v.abs().powi(*e as i32);
            }
            t
        })
        .sum();
    prop_assert!((exact - float).abs() <= 1e-12 * scale.max(1e-300));
    Ok(())
}

pub fn display_reparses(p: &QPoly) -> Check {
    let text = p.display(&XYZ).to_string();
    prop_assert_eq!(QPoly::parse(&text, &XYZ).unwrap(), p.clone());
    Ok(())
}

fn hopf_system(k: &(Q, Q, Q), order: u32) -> [QPoly; 3] {
    let params = ModelParams::hopf_normalized(k.0.clone(), k.1.clone(), k.2.clone()).unwrap();
    focus::checked_system(&params, order).unwrap().eqs
}

pub fn graded_residual(k: &(Q, Q, Q)) -> Check {
    let sys = hopf_system(k, 5);
    let mut st = FocusState::new(2);
    for d in 2..=6 {
        focus::solve_degree(&mut st, &sys, d, &FreePolicy::default()).unwrap();
        let r = focus::graded_residual(&st.candidate.psi, &sys, &st.g, d).unwrap();
        prop_assert!(r.is_zero(), "degree {}", d);
    }
    prop_assert!(st.candidate.psi.graded_part(0).poly.is_zero());
    prop_assert!(st.candidate.psi.graded_part(1).poly.is_zero());
    Ok(())
}

pub fn g1_free_invariance(k: &(Q, Q, Q), free: &Q) -> Check {
    let sys = hopf_system(k, 3);
    let base = focus::focus_quantities(&sys, 1, &FreePolicy::default()).unwrap();
    let other = FreePolicy {
        degree4: free.clone(),
        ..FreePolicy::default()
    };
    let alt = focus::focus_quantities(&sys, 1, &other).unwrap();
    prop_assert_eq!(&base.g[0], &alt.g[0]);
    Ok(())
}

pub fn scaling_covariance(k: &(Q, Q, Q), c: &Q) -> Check {
    let sys = hopf_system(k, 5);
    let base = focus::focus_quantities(&sys, 2, &FreePolicy::default()).unwrap();
    let scaled = focus::focus_quantities(&sys, 2, &FreePolicy::default().scaled(c)).unwrap();
    for (a, b) in base.g.iter().zip(&scaled.g) {
        prop_assert_eq!(a * c, b.clone());
    }
    Ok(())
}

pub fn normalization_chain(k: &(Q, Q, Q)) -> Check {
    let p = ModelParams::hopf_normalized(k.0.clone(), k.1.clone(), k.2.clone()).unwrap();
    let shifted = model::shift_to_equilibrium(&p).unwrap();
    let cp = spectral::char_poly(&shifted.jacobian);
    prop_assert!(spectral::has_minus_one(&cp));
    prop_assert!(spectral::eval_cubic(&cp, &int(-1)).is_zero());
    let ab = spectral::alpha_beta(&p.k3, &p.k4, &p.k5, &p.eps).unwrap();
    prop_assert!(ab.alpha.is_zero());
    prop_assert!(spectral::spectrum(&shifted.jacobian).hopf_normalized);
    let (trace, _) = spectral::trace_det(&cp);
    let a = &shifted.jacobian;
    prop_assert_eq!(trace, &(&a[0][0] + &a[1][1]) + &a[2][2]);
    Ok(())
}

/// `x' = -x + P`, `(y, z)' = (1 + phi) (-z, y)`: `y^2 + z^2` is a first integral.
pub fn integrable_system(p: &QPoly, phi: &QPoly) -> [QPoly; 3] {
    let (x, y, z) = (QPoly::var(3, 0), QPoly::var(3, 1), QPoly::var(3, 2));
    let speed = &QPoly::one(3) + phi;
    [&p.truncate(4) - &x, -&(&z * &speed), &y * &speed]
}

pub fn center_null(p: &QPoly, phi: &QPoly) -> Check {
    let f = focus::focus_quantities(&integrable_system(p, phi), 3, &FreePolicy::default()).unwrap();
    prop_assert_eq!(f.g.len(), 3);
    prop_assert!(f.g.iter().all(Zero::is_zero), "{:?}", f.g);
    Ok(())
}

const SPECIES: [&str; 4] = ["A", "B", "C", "D"];
const WEIGHTS: [i64; 4] = [1, 2, 3, 1];

fn side(counts: &BTreeMap<usize, u32>) -> String {
    counts
        .iter()
        .map(|(s, n)| {
            if *n == 1 {
                SPECIES[*s].to_string()
            } else {
                format!("{n}*{}", SPECIES[*s])
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// A reaction whose products carry the same total weight as its reactants.
fn balanced_reaction() -> impl Strategy<Value = String> {
    (
        prop::collection::vec((0usize..4, 1u32..3), 1..3),
        prop::collection::vec(0usize..4, 8),
    )
        .prop_map(|(lhs, picks)| {
            let mut left = BTreeMap::new();
            for (s, n) in lhs {
                *left.entry(s).or_insert(0) += n;
            }
            let mut mass: i64 = left.iter().map(|(s, n)| WEIGHTS[*s] * *n as i64).sum();
            let mut right = BTreeMap::new();
            for s in picks {
                if WEIGHTS[s] <= mass {
                    *right.entry(s).or_insert(0u32) += 1;
                    mass -= WEIGHTS[s];
                }
            }
            if mass > 0 {
                *right.entry(0).or_insert(0) += mass as u32;
            }
            format!("{} -> {}", side(&left), side(&right))
        })
}

pub fn balanced_network() -> impl Strategy<Value = String> {
    prop::collection::vec(balanced_reaction(), 1..7).prop_map(|rs| {
        let mut text = format!("species {}\n", SPECIES.join(" "));
        for (i, r) in rs.iter().enumerate() {
            text.push_str(&r.replacen("->", &format!("-K{}->", i + 1), 1));
            text.push('\n');
        }
        text
    })
}

pub fn mass_balance(text: &str) -> Check {
    let net = parse_network(text).unwrap();
    let odes = mass_action_odes(&net).unwrap();
    prop_assert!(odes.equations.iter().all(|e| e.power_terms.is_empty()));
    let w: Vec<Q> = WEIGHTS.iter().map(|v| int(*v)).collect();
    prop_assert!(odes.weighted_sum(&w).is_zero(), "{}", text);
    Ok(())
}

pub fn network_round_trip(text: &str) -> Check {
    let net = parse_network(text).unwrap();
    let again = parse_network(&net.to_string()).unwrap();
    prop_assert!(net.same_structure(&again));
    Ok(())
}

//! Focus quantities on center manifolds of three-dimensional ODE systems,
//! applied to a calcium-oscillation model of olfactory sensory neurons.
//!
//! The pipeline: a reaction network ([`netparse`]) yields generalized
//! mass-action ODEs; [`model`] builds the dimensionless, equilibrium-shifted
//! system and its Taylor truncation; [`spectral`] checks the Hopf spectrum;
//! [`focus`] computes the focus quantities g1, g2, ... by graded linear
//! solves; [`manifold`] expands the center manifold and checks positivity of
//! the restricted quadratic form; [`oracle`] holds the closed forms used as
//! ground truth; [`sim`] integrates the full system and detects limit cycles.

pub mod poly;
pub mod rational;

mod linsolve;
#[cfg(test)]
mod testutil;

pub mod cli;
pub mod config;
pub mod focus;
pub mod manifold;
pub mod model;
pub mod netparse;
pub mod oracle;
pub mod sim;
pub mod spectral;

pub use poly::{Coeff, FPoly, Monomial, MultiPoly, QPoly};
pub use rational::Q;

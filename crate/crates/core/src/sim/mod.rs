//! Numerical integration of the model, Poincare return maps, limit-cycle
//! detection and the two-step unfolding of the degenerate Hopf point.

mod cycles;
mod dopri;
mod unfold;

use serde::Serialize;
use thiserror::Error;

use crate::focus::FocusError;
use crate::model::{ModelError, ParamsF64};

pub use cycles::{
    default_seeds, detect_cycles, detect_cycles_with, dominant_modulus, radial_displacement, CycleEstimate,
    CycleOptions, CycleReport, Evidence, SeedOutcome, Stability,
};
pub use dopri::{Dopri5, IntegratorStats, State, StepRecord, Tolerances};
pub use unfold::{unfold_bautin, UnfoldOptions, UnfoldSchedule, UnfoldStep};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("trajectory left the positive octant at t = {t}: {state:?}")]
    LeftPositiveOctant { t: f64, state: [f64; 3] },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-returning orbit: no section crossing within t = {budget}")]
    NonReturning { budget: f64 },
    #[error("initial state must be componentwise positive: {0:?}")]
    InvalidInitialState([f64; 3]),
    #[error("region violated by the unfolding schedule: {0}")]
    Region(String),
    #[error("{0}")]
    Unfold(String),
    #[error(transparent)]
    Focus(#[from] FocusError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Time samples `(t, X1, Y1, Z1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<[f64; 4]>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn last_state(&self) -> [f64; 3] {
        let s = self.samples.last().expect("at least the initial sample");
        [s[1], s[2], s[3]]
    }
}

/// Step cap, well below the oscillation period of the model.
pub const MAX_STEP: f64 = 1.0;

fn check_positive(x0: &[f64; 3]) -> Result<(), SimError> {
    if x0.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(SimError::InvalidInitialState(*x0))
    }
}

fn ensure_octant(t: f64, y: &[f64; 3]) -> Result<(), SimError> {
    if y.iter().all(|v| *v > 0.0) {
        Ok(())
    } else {
        Err(SimError::LeftPositiveOctant { t, state: *y })
    }
}

/// Integrates the model from `x0` to `t_end`. With `sample_dt`, samples are
/// taken on a uniform grid by dense output; otherwise at every accepted step.
pub fn integrate(
    params: &ParamsF64,
    x0: [f64; 3],
    t_end: f64,
    tol: Tolerances,
    sample_dt: Option<f64>,
) -> Result<Trajectory, SimError> {
    check_positive(&x0)?;
    let p = *params;
    let mut d = Dopri5::new(move |y: &State| p.rhs(y), 0.0, x0, tol);
    d.h_max = MAX_STEP;
    let mut samples = vec![[0.0, x0[0], x0[1], x0[2]]];
    let mut next_sample = sample_dt.unwrap_or(0.0);
    while d.t < t_end {
        let rec = d.step(t_end)?;
        ensure_octant(rec.t1, &rec.y1)?;
        match sample_dt {
            None => samples.push([rec.t1, rec.y1[0], rec.y1[1], rec.y1[2]]),
            Some(dt) => {
                while next_sample <= rec.t1 + 1e-12 * rec.t1.abs().max(1.0) && next_sample <= t_end {
                    let s = rec.at(next_sample.min(rec.t1));
                    samples.push([next_sample, s[0], s[1], s[2]]);
                    next_sample = samples.len() as f64 * dt;
                }
            }
        }
    }
    Ok(Trajectory {
        samples,
        stats: d.stats,
    })
}

/// The plane `Y1 = level`, crossed with `Y1' > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareSection {
    pub level: f64,
    /// Crossings with `|Y1'|` below this are discarded as grazes.
    pub graze_tol: f64,
}

impl Default for PoincareSection {
    fn default() -> Self {
        PoincareSection {
            level: 1.0,
            graze_tol: 1e-9,
        }
    }
}

impl PoincareSection {
    /// Section coordinates `(X1, Z1)` to a state.
    pub fn lift(&self, p: [f64; 2]) -> [f64; 3] {
        [p[0], self.level, p[1]]
    }

    pub fn project(&self, s: &[f64; 3]) -> [f64; 2] {
        [s[0], s[2]]
    }
}

/// Next upward crossing of a section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub point: [f64; 2],
    pub elapsed: f64,
    pub stats: IntegratorStats,
}

/// Locates `Y(theta) = level` inside a step by safeguarded secant iteration.
fn refine_crossing(rec: &StepRecord, level: f64) -> (f64, [f64; 3]) {
    let g = |th: f64| rec.dense(th)[1] - level;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let (mut ga, mut gb) = (g(a), g(b));
    let mut side = 0i8;
    for _ in 0..100 {
        let mut m = (a * gb - b * ga) / (gb - ga);
        if !(m > a && m < b) {
            m = 0.5 * (a + b);
        }
        let gm = g(m);
        if gm.abs() <= 1e-13 || (b - a) < 1e-15 {
            a = m;
            b = m;
            break;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
            if side == -1 {
                gb /= 2.0;
            }
            side = -1;
        } else {
            b = m;
            gb = gm;
            if side == 1 {
                ga /= 2.0;
            }
            side = 1;
        }
    }
    let th = 0.5 * (a + b);
    (rec.t0 + th * (rec.t1 - rec.t0), rec.dense(th))
}

/// Integrates from `x0` to the next upward crossing of the section.
pub fn first_crossing(
    params: &ParamsF64,
    section: &PoincareSection,
    x0: [f64; 3],
    tol: Tolerances,
    budget: f64,
) -> Result<Crossing, SimError> {
    let p = *params;
    first_crossing_with(&move |y: &State| p.rhs(y), section, x0, tol, budget)
}

/// [`first_crossing`] for an arbitrary vector field on the positive octant.
pub fn first_crossing_with<F: Fn(&State) -> State>(
    f: &F,
    section: &PoincareSection,
    x0: [f64; 3],
    tol: Tolerances,
    budget: f64,
) -> Result<Crossing, SimError> {
    check_positive(&x0)?;
    let mut d = Dopri5::new(f, 0.0, x0, tol);
    d.h_max = MAX_STEP;
    while d.t < budget {
        let rec = d.step(budget)?;
        ensure_octant(rec.t1, &rec.y1)?;
        let g0 = rec.y0[1] - section.level;
        let g1 = rec.y1[1] - section.level;
        if g0 < 0.0 && g1 >= 0.0 {
            let (t, s) = refine_crossing(&rec, section.level);
            if f(&s)[1].abs() < section.graze_tol {
                continue;
            }
            return Ok(Crossing {
                point: section.project(&s),
                elapsed: t,
                stats: d.stats,
            });
        }
    }
    Err(SimError::NonReturning { budget })
}

/// The return map of the section at an in-section point.
pub fn poincare_map(
    params: &ParamsF64,
    section: &PoincareSection,
    p: [f64; 2],
    tol: Tolerances,
    budget: f64,
) -> Result<Crossing, SimError> {
    first_crossing(params, section, section.lift(p), tol, budget)
}

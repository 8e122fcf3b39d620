//! Limit cycles as fixed points of the section return map.

use rayon::prelude::*;
use serde::Serialize;

use super::{first_crossing_with, IntegratorStats, PoincareSection, SimError, State, Tolerances};
use crate::model::ParamsF64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleOptions {
    pub tol: Tolerances,
    pub section: PoincareSection,
    /// Returns discarded before convergence checks.
    pub transient: usize,
    pub fixed_tol: f64,
    /// Returns averaged for the period.
    pub period_returns: usize,
    pub max_returns: usize,
    /// Time budget for a single return.
    pub return_budget: f64,
    pub newton_iterations: usize,
    /// Central-difference step for the map Jacobian.
    pub jacobian_step: f64,
    /// In-section distance below which a fixed point is the equilibrium.
    pub equilibrium_tol: f64,
    /// Interior grid points of the radial scan along each ray.
    pub radial_points: usize,
    /// Bracket width, as a fraction of the ray, where bisection stops.
    pub radial_width: f64,
    /// Displacements below this have no reliable sign.
    pub displacement_floor: f64,
    /// Worker cap; `None` reads `CYCLIA_THREADS`, then uses all cores.
    pub threads: Option<usize>,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            tol: Tolerances::default(),
            section: PoincareSection::default(),
            transient: 20,
            fixed_tol: 1e-8,
            period_returns: 5,
            max_returns: 400,
            return_budget: 1000.0,
            newton_iterations: 12,
            jacobian_step: 1e-4,
            equilibrium_tol: 1e-5,
            radial_points: 16,
            radial_width: 1e-3,
            displacement_floor: 1e-10,
            threads: None,
        }
    }
}

impl CycleOptions {
    pub fn thread_count(&self) -> usize {
        self.threads
            .or_else(|| std::env::var("CYCLIA_THREADS").ok()?.parse().ok())
            .filter(|n| *n > 0)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// Converged fixed point of the return map.
    Direct,
    /// Sign change of the radial displacement only.
    Bracketed,
    /// Sign change confirmed by a converged fixed point inside the bracket.
    BracketedAndDirect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleEstimate {
    /// `(X1, Z1)` on the section.
    pub fixed_point: [f64; 2],
    pub period: Option<f64>,
    /// Dominant eigenvalue modulus of the return-map Jacobian.
    pub mu: Option<f64>,
    pub residual: Option<f64>,
    pub stability: Stability,
    pub evidence: Evidence,
    /// `[r_in, r_out]` as fractions of the ray from the equilibrium to the
    /// enclosing stable cycle.
    pub radial_bracket: Option<[f64; 2]>,
    /// Indices of seeds that led to this cycle.
    pub seeds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SeedOutcome {
    Cycle { index: usize },
    Equilibrium,
    Unresolved { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub equilibrium: [f64; 3],
    pub cycles: Vec<CycleEstimate>,
    pub seeds: Vec<SeedOutcome>,
    pub stats: IntegratorStats,
}

impl CycleReport {
    pub fn stable(&self) -> impl Iterator<Item = &CycleEstimate> {
        self.cycles.iter().filter(|c| c.stability == Stability::Stable)
    }

    pub fn unstable(&self) -> impl Iterator<Item = &CycleEstimate> {
        self.cycles.iter().filter(|c| c.stability == Stability::Unstable)
    }

    /// An unstable cycle bracketed strictly inside a stable one.
    pub fn nested(&self) -> bool {
        self.unstable()
            .any(|c| c.radial_bracket.is_some_and(|[a, b]| a > 0.0 && b < 1.0 && a < b))
    }
}

/// Return map of one field on one section.
struct ReturnMap<'a, F> {
    f: &'a F,
    opts: &'a CycleOptions,
    stats: IntegratorStats,
}

struct Return {
    point: [f64; 2],
    elapsed: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl<F: Fn(&State) -> State> ReturnMap<'_, F> {
    fn first_return(&mut self, x0: State) -> Result<Return, SimError> {
        let c = first_crossing_with(self.f, &self.opts.section, x0, self.opts.tol, self.opts.return_budget)?;
        self.stats.merge(&c.stats);
        Ok(Return {
            point: c.point,
            elapsed: c.elapsed,
        })
    }

    fn apply(&mut self, p: [f64; 2]) -> Result<Return, SimError> {
        self.first_return(self.opts.section.lift(p))
    }

    /// Central-difference Jacobian of the map.
    fn jacobian(&mut self, p: [f64; 2]) -> Result<[[f64; 2]; 2], SimError> {
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = self.opts.jacobian_step * p[k].abs().max(1e-2);
            let mut plus = p;
            let mut minus = p;
            plus[k] += h;
            minus[k] -= h;
            let a = self.apply(plus)?.point;
            let b = self.apply(minus)?.point;
            for i in 0..2 {
                j[i][k] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        Ok(j)
    }

    /// Newton on `P(p) - p`. Returns the point and its residual.
    fn newton(&mut self, mut p: [f64; 2]) -> Result<Option<([f64; 2], f64)>, SimError> {
        let mut best: Option<([f64; 2], f64)> = None;
        for _ in 0..self.opts.newton_iterations {
            let r = self.apply(p)?.point;
            let res = [r[0] - p[0], r[1] - p[1]];
            let norm = res[0].hypot(res[1]);
            if best.is_none_or(|(_, b)| norm < b) {
                best = Some((p, norm));
            }
            if norm <= self.opts.fixed_tol {
                return Ok(best);
            }
            let j = self.jacobian(p)?;
            let m = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let dx = (m[1][1] * res[0] - m[0][1] * res[1]) / det;
            let dz = (m[0][0] * res[1] - m[1][0] * res[0]) / det;
            let step = [-dx, -dz];
            p = [p[0] + step[0], p[1] + step[1]];
            if !(p[0] > 0.0 && p[1] > 0.0) {
                break;
            }
        }
        Ok(best.filter(|(_, n)| *n <= self.opts.fixed_tol))
    }

    fn mu(&mut self, p: [f64; 2]) -> Result<f64, SimError> {
        Ok(dominant_modulus(self.jacobian(p)?))
    }

    fn period(&mut self, p: [f64; 2]) -> Result<f64, SimError> {
        let n = self.opts.period_returns.max(1);
        let mut q = p;
        let mut total = 0.0;
        for _ in 0..n {
            let r = self.apply(q)?;
            total += r.elapsed;
            q = r.point;
        }
        Ok(total / n as f64)
    }
}

/// Largest eigenvalue modulus of a real 2x2 matrix.
pub fn dominant_modulus(j: [[f64; 2]; 2]) -> f64 {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        det.abs().sqrt()
    }
}

enum Found {
    Cycle([f64; 2], f64),
    Equilibrium,
    Unresolved(String),
}

fn aitken(x0: f64, x1: f64, x2: f64) -> Option<f64> {
    let den = x2 - 2.0 * x1 + x0;
    (den != 0.0 && den.is_finite()).then(|| x2 - (x2 - x1) * (x2 - x1) / den)
}

fn run_seed<F: Fn(&State) -> State>(f: &F, eq: [f64; 2], seed: State, opts: &CycleOptions) -> (Found, IntegratorStats) {
    let mut map = ReturnMap {
        f,
        opts,
        stats: IntegratorStats::default(),
    };
    let found = (|| -> Result<Found, SimError> {
        let mut p = match map.first_return(seed) {
            Ok(r) => r.point,
            Err(SimError::NonReturning { .. }) => return Ok(Found::Equilibrium),
            Err(e) => return Err(e),
        };
        let mut hist: Vec<[f64; 2]> = vec![p];
        let mut steps: Vec<f64> = Vec::new();
        for i in 0..opts.max_returns {
            let next = match map.apply(p) {
                Ok(r) => r.point,
                Err(SimError::NonReturning { .. }) => return Ok(Found::Equilibrium),
                Err(e) => return Err(e),
            };
            let step = dist(next, p);
            p = next;
            hist.push(p);
            steps.push(step);
            if dist(p, eq) <= opts.equilibrium_tol {
                return Ok(Found::Equilibrium);
            }
            if i + 1 < opts.transient || hist.len() < 3 {
                continue;
            }
            if step <= opts.fixed_tol {
                return Ok(Found::Cycle(p, step));
            }
            let n = hist.len();
            let (h0, h1, h2) = (hist[n - 3], hist[n - 2], hist[n - 1]);
            let contracting = steps[steps.len() - 1] < steps[steps.len() - 2];
            if !contracting || !(i + 1 - opts.transient).is_multiple_of(5) {
                continue;
            }
            let (d0, d1, d2) = (dist(h0, eq), dist(h1, eq), dist(h2, eq));
            if d2 < d1 && d1 < d0 && aitken(d0, d1, d2).is_some_and(|l| l < 1e-2 * d2) {
                return Ok(Found::Equilibrium);
            }
            let extrapolated = match (aitken(h0[0], h1[0], h2[0]), aitken(h0[1], h1[1], h2[1])) {
                (Some(x), Some(z)) => [x, z],
                _ => continue,
            };
            let anchor = p;
            let limit_ok = |q: [f64; 2]| dist(q, anchor) <= 1e3 * step && dist(q, eq) >= 0.5 * dist(anchor, eq);
            if limit_ok(extrapolated) && extrapolated.iter().all(|v| *v > 0.0) {
                if let Ok(r) = map.apply(extrapolated) {
                    let res = dist(r.point, extrapolated);
                    if res < step {
                        p = extrapolated;
                        hist.push(p);
                        steps.push(res);
                        if res <= opts.fixed_tol {
                            return Ok(Found::Cycle(p, res));
                        }
                    }
                }
            }
            if steps[steps.len() - 1] < 1e-5 {
                if let Some((q, res)) = map.newton(p)? {
                    if limit_ok(q) {
                        return Ok(Found::Cycle(q, res));
                    }
                }
            }
        }
        Ok(Found::Unresolved(format!(
            "no fixed point within {} returns",
            opts.max_returns
        )))
    })();
    let found = found.unwrap_or_else(|e| Found::Unresolved(e.to_string()));
    (found, map.stats)
}

/// Radial displacement `|P(q) - e| - |q - e|` with `q = P(p(r))` and
/// `p(r) = e + r (c - e)` on the section. Returns the displacement and `q`.
pub fn radial_displacement<F: Fn(&State) -> State>(
    f: &F,
    eq: [f64; 2],
    toward: [f64; 2],
    r: f64,
    opts: &CycleOptions,
) -> Result<(f64, [f64; 2], IntegratorStats), SimError> {
    let mut map = ReturnMap {
        f,
        opts,
        stats: IntegratorStats::default(),
    };
    let p = [eq[0] + r * (toward[0] - eq[0]), eq[1] + r * (toward[1] - eq[1])];
    let q = map.apply(p)?.point;
    let q2 = map.apply(q)?.point;
    Ok((dist(q2, eq) - dist(q, eq), q, map.stats))
}

fn sign_of(d: f64, floor: f64) -> i8 {
    if d > floor {
        1
    } else if d < -floor {
        -1
    } else {
        0
    }
}

/// Scans the ray from the equilibrium to a stable cycle for an inward
/// negative to positive change of the displacement and bisects it.
fn radial_scan<F: Fn(&State) -> State>(
    f: &F,
    eq: [f64; 2],
    cycle: [f64; 2],
    opts: &CycleOptions,
    stats: &mut IntegratorStats,
) -> Vec<[f64; 2]> {
    let n = opts.radial_points.max(2);
    let grid: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
    let signs: Vec<i8> = grid
        .iter()
        .map(|&r| match radial_displacement(f, eq, cycle, r, opts) {
            Ok((d, _, s)) => {
                stats.merge(&s);
                sign_of(d, opts.displacement_floor)
            }
            Err(_) => 0,
        })
        .collect();
    let mut brackets = Vec::new();
    for w in 0..grid.len().saturating_sub(1) {
        if signs[w] != -1 || signs[w + 1] != 1 {
            continue;
        }
        let (mut lo, mut hi) = (grid[w], grid[w + 1]);
        while hi - lo > opts.radial_width {
            let mid = 0.5 * (lo + hi);
            let s = match radial_displacement(f, eq, cycle, mid, opts) {
                Ok((d, _, st)) => {
                    stats.merge(&st);
                    sign_of(d, opts.displacement_floor)
                }
                Err(_) => 0,
            };
            match s {
                -1 => lo = mid,
                1 => hi = mid,
                _ => break,
            }
        }
        brackets.push([lo, hi]);
    }
    brackets
}

fn pool(opts: &CycleOptions) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(opts.thread_count())
        .build()
        .expect("thread pool")
}

/// Cycle detection for the model.
pub fn detect_cycles(params: &ParamsF64, seeds: &[State], opts: &CycleOptions) -> CycleReport {
    let p = *params;
    detect_cycles_with(&move |y: &State| p.rhs(y), p.equilibrium(), seeds, opts)
}

/// Cycle detection for any field with a known equilibrium on the section.
pub fn detect_cycles_with<F: Fn(&State) -> State + Sync>(
    f: &F,
    equilibrium: State,
    seeds: &[State],
    opts: &CycleOptions,
) -> CycleReport {
    let eq = opts.section.project(&equilibrium);
    let results: Vec<(Found, IntegratorStats)> =
        pool(opts).install(|| seeds.par_iter().map(|s| run_seed(f, eq, *s, opts)).collect());

    let mut stats = IntegratorStats::default();
    let mut cycles: Vec<CycleEstimate> = Vec::new();
    let mut outcomes = Vec::with_capacity(seeds.len());
    let merge_tol = (1e3 * opts.fixed_tol).max(1e-6);
    for (i, (found, st)) in results.into_iter().enumerate() {
        stats.merge(&st);
        outcomes.push(match found {
            Found::Equilibrium => SeedOutcome::Equilibrium,
            Found::Unresolved(reason) => SeedOutcome::Unresolved { reason },
            Found::Cycle(p, res) => {
                let index = match cycles.iter().position(|c| dist(c.fixed_point, p) <= merge_tol) {
                    Some(k) => k,
                    None => {
                        cycles.push(CycleEstimate {
                            fixed_point: p,
                            period: None,
                            mu: None,
                            residual: Some(res),
                            stability: Stability::Stable,
                            evidence: Evidence::Direct,
                            radial_bracket: None,
                            seeds: Vec::new(),
                        });
                        cycles.len() - 1
                    }
                };
                cycles[index].seeds.push(i);
                SeedOutcome::Cycle { index }
            }
        });
    }

    let characterize = |p: [f64; 2]| {
        let mut map = ReturnMap {
            f,
            opts,
            stats: IntegratorStats::default(),
        };
        let mu = map.mu(p).ok();
        let period = map.period(p).ok();
        (mu, period, map.stats)
    };
    let chars: Vec<_> = pool(opts).install(|| cycles.par_iter().map(|c| characterize(c.fixed_point)).collect());
    for (c, (mu, period, st)) in cycles.iter_mut().zip(chars) {
        stats.merge(&st);
        c.mu = mu;
        c.period = period;
        if mu.is_some_and(|m| m >= 1.0) {
            c.stability = Stability::Unstable;
        }
    }

    let stable: Vec<[f64; 2]> = cycles
        .iter()
        .filter(|c| c.stability == Stability::Stable)
        .map(|c| c.fixed_point)
        .collect();
    let scans: Vec<(Vec<[f64; 2]>, IntegratorStats)> = pool(opts).install(|| {
        stable
            .par_iter()
            .map(|c| {
                let mut st = IntegratorStats::default();
                let b = radial_scan(f, eq, *c, opts, &mut st);
                (b, st)
            })
            .collect()
    });
    for (c, (brackets, st)) in stable.iter().zip(scans) {
        stats.merge(&st);
        for b in brackets {
            let mut map = ReturnMap {
                f,
                opts,
                stats: IntegratorStats::default(),
            };
            let mid = 0.5 * (b[0] + b[1]);
            let start = [eq[0] + mid * (c[0] - eq[0]), eq[1] + mid * (c[1] - eq[1])];
            let confirmed = map
                .apply(start)
                .ok()
                .and_then(|q| map.newton(q.point).ok().flatten())
                .filter(|(q, _)| dist(*q, eq) > opts.equilibrium_tol && dist(*q, *c) > merge_tol);
            let (mu, period) = match confirmed {
                Some((q, _)) => (map.mu(q).ok(), map.period(q).ok()),
                None => (None, None),
            };
            stats.merge(&map.stats);
            let estimate = match confirmed {
                Some((q, res)) if mu.is_some_and(|m| m >= 1.0) => CycleEstimate {
                    fixed_point: q,
                    period,
                    mu,
                    residual: Some(res),
                    stability: Stability::Unstable,
                    evidence: Evidence::BracketedAndDirect,
                    radial_bracket: Some(b),
                    seeds: Vec::new(),
                },
                _ => CycleEstimate {
                    fixed_point: start,
                    period: None,
                    mu: None,
                    residual: None,
                    stability: Stability::Unstable,
                    evidence: Evidence::Bracketed,
                    radial_bracket: Some(b),
                    seeds: Vec::new(),
                },
            };
            match cycles
                .iter_mut()
                .find(|u| u.stability == Stability::Unstable && dist(u.fixed_point, estimate.fixed_point) <= merge_tol)
            {
                Some(u) => {
                    u.radial_bracket = Some(b);
                    u.evidence = Evidence::BracketedAndDirect;
                }
                None => cycles.push(estimate),
            }
        }
    }

    CycleReport {
        equilibrium,
        cycles,
        seeds: outcomes,
        stats,
    }
}

/// Seeds placed relative to the equilibrium: two inward offsets matching the
/// reference runs, then a ring of small and large perturbations.
pub fn default_seeds(equilibrium: State) -> Vec<State> {
    let e = equilibrium;
    vec![
        [e[0] - 1.0, e[1] - 0.5, e[2] + 0.02],
        [e[0] - 0.2, e[1] - 0.2, e[2] + 0.02],
    ]
}

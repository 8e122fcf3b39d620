//! Dormand-Prince 5(4) with the standard fourth-order dense output.

use serde::Serialize;

use super::SimError;

pub type State = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-11,
        }
    }
}

impl Tolerances {
    pub fn halved(self) -> Self {
        Tolerances {
            rtol: self.rtol / 2.0,
            atol: self.atol / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted scaled error estimate (at most 1).
    pub max_error_estimate: f64,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
        self.max_error_estimate = self.max_error_estimate.max(other.max_error_estimate);
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t0: f64,
    pub t1: f64,
    pub y0: State,
    pub y1: State,
    rc: [State; 5],
}

impl StepRecord {
    /// Interpolated state at `t0 + theta (t1 - t0)`, `theta` in `[0, 1]`.
    pub fn dense(&self, theta: f64) -> State {
        let th1 = 1.0 - theta;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let r = |k: usize| self.rc[k][i];
            *o = r(0) + theta * (r(1) + th1 * (r(2) + theta * (r(3) + th1 * r(4))));
        }
        out
    }

    pub fn at(&self, t: f64) -> State {
        let h = self.t1 - self.t0;
        self.dense(if h == 0.0 { 1.0 } else { (t - self.t0) / h })
    }
}

/// Adaptive integrator state.
pub struct Dopri5<F: Fn(&State) -> State> {
    f: F,
    pub t: f64,
    pub y: State,
    k1: State,
    h: f64,
    tol: Tolerances,
    pub stats: IntegratorStats,
    pub h_max: f64,
}

fn err_norm(err: &State, y0: &State, y1: &State, tol: &Tolerances) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let sc = tol.atol + tol.rtol * y0[i].abs().max(y1[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / 3.0).sqrt()
}

impl<F: Fn(&State) -> State> Dopri5<F> {
    pub fn new(f: F, t0: f64, y0: State, tol: Tolerances) -> Self {
        let k1 = f(&y0);
        let mut me = Dopri5 {
            f,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            tol,
            stats: IntegratorStats {
                evaluations: 1,
                ..Default::default()
            },
            h_max: f64::INFINITY,
        };
        me.h = me.initial_step();
        me
    }

    fn initial_step(&mut self) -> f64 {
        let scale = |y: &State, i: usize| self.tol.atol + self.tol.rtol * y[i].abs();
        let norm = |v: &State, y: &State| ((0..3).map(|i| (v[i] / scale(y, i)).powi(2)).sum::<f64>() / 3.0).sqrt();
        let d0 = norm(&self.y, &self.y);
        let d1 = norm(&self.k1, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: State = std::array::from_fn(|i| self.y[i] + h0 * self.k1[i]);
        let f1 = (self.f)(&y1);
        self.stats.evaluations += 1;
        let diff: State = std::array::from_fn(|i| f1[i] - self.k1[i]);
        let d2 = norm(&diff, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(1.0)
    }

    /// Takes one accepted step, never past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<StepRecord, SimError> {
        loop {
            let mut h = self.h.min(self.h_max);
            let last = self.t + h >= t_limit;
            if last {
                h = t_limit - self.t;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(self.underflow(h));
            }
            let mut k = [[0.0; 3]; 7];
            k[0] = self.k1;
            let mut finite = true;
            for s in 1..7 {
                let ys: State = std::array::from_fn(|i| self.y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>());
                k[s] = (self.f)(&ys);
                finite &= k[s].iter().all(|v| v.is_finite());
            }
            self.stats.evaluations += 6;
            let y1: State = std::array::from_fn(|i| self.y[i] + h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>());
            let err: State = std::array::from_fn(|i| h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>());
            let en = if finite && y1.iter().all(|v| v.is_finite()) {
                err_norm(&err, &self.y, &y1, &self.tol)
            } else {
                f64::INFINITY
            };
            if en <= 1.0 {
                let t0 = self.t;
                let t1 = if last { t_limit } else { self.t + h };
                let ydiff: State = std::array::from_fn(|i| y1[i] - self.y[i]);
                let bspl: State = std::array::from_fn(|i| h * k[0][i] - ydiff[i]);
                let rc = [
                    self.y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - h * k[6][i] - bspl[i]),
                    std::array::from_fn(|i| h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()),
                ];
                let rec = StepRecord {
                    t0,
                    t1,
                    y0: self.y,
                    y1,
                    rc,
                };
                self.stats.steps += 1;
                self.stats.max_error_estimate = self.stats.max_error_estimate.max(en);
                let fac = if en == 0.0 {
                    5.0
                } else {
                    (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                };
                self.t = t1;
                self.y = y1;
                self.k1 = k[6];
                if !last {
                    self.h = h * fac;
                }
                return Ok(rec);
            }
            self.stats.rejected += 1;
            let fac = if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            self.h = h * fac;
        }
    }

    fn underflow(&self, h: f64) -> SimError {
        if self.y.iter().any(|v| *v < 1e-6) {
            SimError::LeftPositiveOctant {
                t: self.t,
                state: self.y,
            }
        } else {
            SimError::StepSizeUnderflow { t: self.t, h }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy() {
        let f = |y: &State| [y[1], -y[0], 0.0];
        let mut d = Dopri5::new(f, 0.0, [1.0, 0.0, 1.0], Tolerances::default());
        let end = 2.0 * std::f64::consts::PI;
        let mut recs = Vec::new();
        while d.t < end {
            recs.push(d.step(end).unwrap());
        }
        assert!((d.y[0] - 1.0).abs() < 1e-8 && d.y[1].abs() < 1e-8);
        for r in &recs {
            let tm = 0.5 * (r.t0 + r.t1);
            let s = r.at(tm);
            assert!((s[0] - tm.cos()).abs() < 1e-7, "dense output at {tm}");
        }
    }

    #[test]
    fn exponential_decay() {
        let f = |y: &State| [-y[0], -2.0 * y[1], 0.0];
        let mut d = Dopri5::new(
            f,
            0.0,
            [1.0, 1.0, 0.0],
            Tolerances {
                rtol: 1e-10,
                atol: 1e-12,
            },
        );
        while d.t < 3.0 {
            d.step(3.0).unwrap();
        }
        assert!((d.y[0] - (-3.0f64).exp()).abs() < 1e-9);
        assert!((d.y[1] - (-6.0f64).exp()).abs() < 1e-9);
        assert_eq!(d.t, 3.0);
    }
}

//! Adaptive explicit Runge-Kutta integrator (Dormand-Prince 8(5,3)) for complex state vectors.

use super::tableau::{A, B, C, E3, E5};
use crate::error::{Error, Result};
use crate::linalg::C64;

const STAGES: usize = 12;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step in s.
    pub h_max: f64,
    /// Steps below this size abort with a stiffness error.
    pub h_min: f64,
    pub max_steps: usize,
    /// Fastest frequency scale of the problem in rad/s, reported on step-size underflow.
    pub freq_scale: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_min: 1e-18,
            max_steps: 50_000_000,
            freq_scale: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for IntegratorStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

/// Reusable stage storage for a fixed problem size.
pub struct Dop853 {
    n: usize,
    k: Vec<Vec<C64>>,
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    /// Step size carried between calls.
    h: Option<f64>,
}

fn rms(v: &[C64], scale: &[f64]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(z, s)| (z / s).norm_sqr()).sum();
    (s / v.len().max(1) as f64).sqrt()
}

impl Dop853 {
    pub fn new(n: usize) -> Self {
        Dop853 {
            n,
            k: (0..=STAGES).map(|_| vec![C64::new(0.0, 0.0); n]).collect(),
            y_stage: vec![C64::new(0.0, 0.0); n],
            y_new: vec![C64::new(0.0, 0.0); n],
            h: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn initial_step<F>(&mut self, f: &mut F, t0: f64, y: &[C64], opts: &IntegratorOptions, dir: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let scale: Vec<f64> = y.iter().map(|z| opts.atol + z.norm() * opts.rtol).collect();
        let d0 = rms(y, &scale);
        let d1 = rms(&self.k[0], &scale);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(opts.h_max);
        for i in 0..self.n {
            self.y_stage[i] = y[i] + self.k[0][i] * (dir * h0);
        }
        let (first, rest) = self.k.split_at_mut(1);
        f(t0 + dir * h0, &self.y_stage, &mut rest[0]);
        let diff: Vec<C64> = rest[0].iter().zip(&first[0]).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff, &scale) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (1e-6f64).max(h0 * 1e-3)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(opts.h_max)
    }

    /// Integrate `dy/dt = f(t, y)` from `t0` to `t1` in place. `stops` are times at which a step
    /// is forced to end and `observer` is called; they must be sorted in the direction of travel.
    pub fn integrate<F, O>(
        &mut self,
        f: &mut F,
        t0: f64,
        t1: f64,
        y: &mut [C64],
        opts: &IntegratorOptions,
        stops: &[f64],
        observer: &mut O,
    ) -> Result<IntegratorStats>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
        O: FnMut(f64, &[C64]),
    {
        assert_eq!(y.len(), self.n, "state length does not match integrator");
        let mut stats = IntegratorStats::default();
        if t1 == t0 {
            for &s in stops {
                if s == t0 {
                    observer(s, y);
                }
            }
            return Ok(stats);
        }
        let dir = (t1 - t0).signum();
        let n = self.n;
        f(t0, y, &mut self.k[0]);
        stats.evaluations += 1;
        let mut h = match self.h {
            Some(h) => h.min(opts.h_max),
            None => {
                stats.evaluations += 1;
                self.initial_step(f, t0, y, opts, dir)
            }
        };
        let mut t = t0;
        let mut stop_iter = stops.iter().copied().filter(|s| (s - t0) * dir >= 0.0).peekable();
        while let Some(&s) = stop_iter.peek() {
            if s == t0 {
                observer(s, y);
                stop_iter.next();
            } else {
                break;
            }
        }
        let mut rejected_last = false;
        let mut scale = vec![0.0; n];
        let mut err5 = vec![C64::new(0.0, 0.0); n];
        let mut err3 = vec![C64::new(0.0, 0.0); n];
        while (t1 - t) * dir > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::MaxSteps(opts.max_steps));
            }
            let target = match stop_iter.peek() {
                Some(&s) if (s - t1) * dir < 0.0 => s,
                _ => t1,
            };
            let mut step = h.min(opts.h_max);
            let mut clipped = false;
            if (t + dir * step - target) * dir >= 0.0 || (target - t).abs() < 1e-9 * step {
                step = (target - t).abs();
                clipped = true;
            }
            if step < opts.h_min && !clipped {
                return Err(Error::Stiffness { t, step, freq_scale: opts.freq_scale });
            }
            let hs = dir * step;
            for s in 1..STAGES {
                self.y_stage.copy_from_slice(y);
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        let c = *a * hs;
                        for (ys, kj) in self.y_stage.iter_mut().zip(&self.k[j]) {
                            *ys += kj * c;
                        }
                    }
                }
                let (_, rest) = self.k.split_at_mut(s);
                f(t + C[s] * hs, &self.y_stage, &mut rest[0]);
            }
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                let mut e5 = C64::new(0.0, 0.0);
                let mut e3 = C64::new(0.0, 0.0);
                for j in 0..STAGES {
                    let kj = self.k[j][i];
                    acc += kj * B[j];
                    e5 += kj * E5[j];
                    e3 += kj * E3[j];
                }
                self.y_new[i] = y[i] + acc * hs;
                err5[i] = e5;
                err3[i] = e3;
                scale[i] = opts.atol + y[i].norm().max(self.y_new[i].norm()) * opts.rtol;
            }
            stats.evaluations += STAGES - 1;
            let mut n5 = 0.0;
            let mut n3 = 0.0;
            for i in 0..n {
                n5 += (err5[i] / scale[i]).norm_sqr();
                n3 += (err3[i] / scale[i]).norm_sqr();
            }
            let err = if n5 == 0.0 && n3 == 0.0 {
                0.0
            } else {
                step * n5 / ((n5 + 0.01 * n3) * n as f64).sqrt()
            };
            if !err.is_finite() {
                return Err(Error::NonFinite(t));
            }
            if err < 1.0 {
                let mut factor = if err == 0.0 { MAX_FACTOR } else { MAX_FACTOR.min(SAFETY * err.powf(-1.0 / 8.0)) };
                if rejected_last {
                    factor = factor.min(1.0);
                }
                t = if clipped { target } else { t + hs };
                y.copy_from_slice(&self.y_new);
                f(t, y, &mut self.k[0]);
                stats.evaluations += 1;
                stats.accepted += 1;
                if clipped {
                    if let Some(&s) = stop_iter.peek() {
                        if s == target {
                            observer(s, y);
                            stop_iter.next();
                        }
                    }
                }
                // a clipped step says nothing about the natural step size
                if !clipped || factor < 1.0 {
                    h = step * factor;
                }
                rejected_last = false;
            } else {
                h = step * MIN_FACTOR.max(SAFETY * err.powf(-1.0 / 8.0));
                rejected_last = true;
                stats.rejected += 1;
                if h < opts.h_min {
                    return Err(Error::Stiffness { t, step: h, freq_scale: opts.freq_scale });
                }
            }
        }
        self.h = Some(h);
        Ok(stats)
    }

    /// Forget the carried step size, e.g. before integrating an unrelated problem.
    pub fn reset(&mut self) {
        self.h = None;
    }
}

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::integrator::{Dop853, IntegratorOptions, IntegratorStats};
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::hamiltonian::{Basis, Level, OperatorModel, Workspace};
use crate::linalg::{cis, C64, I};
use crate::pulse::{GateSchedule, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Minimum steps per period of the fastest frequency for the full model.
    pub samples_per_period: f64,
    pub max_steps: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions { rtol: 1e-10, atol: 1e-12, samples_per_period: 20.0, max_steps: 50_000_000 }
    }
}

impl PropagationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::config("propagation", "tolerances must be positive"));
        }
        if !(self.samples_per_period >= 1.0) {
            return Err(Error::config("propagation.samples_per_period", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub state: QuantumState,
    pub stats: IntegratorStats,
    /// Largest |‖ψ‖ − 1| seen at segment boundaries and samples.
    pub norm_drift: f64,
}

/// States sampled at requested times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub final_state: QuantumState,
    pub norm_drift: f64,
}

/// `exp(-i t/2 (v . σ))` on one qubit in the ordered basis (down, up) with Z(up) = +1.
pub fn qubit_unitary(v: [f64; 3], t: f64) -> Matrix2<C64> {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r == 0.0 {
        return Matrix2::identity();
    }
    let (nx, ny, nz) = (v[0] / r, v[1] / r, v[2] / r);
    let a = 0.5 * r * t;
    let (c, s) = (a.cos(), a.sin());
    let ns = Matrix2::new(
        C64::new(-nz, 0.0),
        C64::new(nx, ny),
        C64::new(nx, -ny),
        C64::new(nz, 0.0),
    );
    Matrix2::identity() * C64::new(c, 0.0) - ns * (I * s)
}

/// Apply a single-qubit unitary to ion `ion`, leaving non-qubit levels untouched.
pub fn apply_qubit_unitary(basis: &Basis, psi: &mut [C64], ion: usize, u: &Matrix2<C64>) {
    let d = basis.level_index(Level::Down).expect("down level");
    let up = basis.level_index(Level::Up).expect("up level");
    let p = basis.phonon_dim();
    for s in 0..basis.level_count() {
        let i0 = basis.pair_for(ion, d, s) * p;
        let i1 = basis.pair_for(ion, up, s) * p;
        for k in 0..p {
            let (a, b) = (psi[i0 + k], psi[i1 + k]);
            psi[i0 + k] = u[(0, 0)] * a + u[(0, 1)] * b;
            psi[i1 + k] = u[(1, 0)] * a + u[(1, 1)] * b;
        }
    }
}

fn idle(basis: &Basis, psi: &mut [C64], shift: f64, dt: f64) {
    if shift == 0.0 || dt == 0.0 {
        return;
    }
    let l = basis.level_count();
    let p = basis.phonon_dim();
    for a in 0..l {
        for b in 0..l {
            let e = 0.5 * shift * (basis.levels[a].z() + basis.levels[b].z());
            if e == 0.0 {
                continue;
            }
            let ph = cis(-e * dt);
            let base = basis.pair_index(a, b) * p;
            for z in &mut psi[base..base + p] {
                *z *= ph;
            }
        }
    }
}

fn norm_dev(psi: &[C64]) -> f64 {
    (psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs()
}

/// Propagate `state` through `schedule` with the laser field scaled by `amplitude`.
pub fn propagate(
    model: &OperatorModel,
    state: &QuantumState,
    schedule: &GateSchedule,
    amplitude: f64,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    propagate_observed(model, state, schedule, amplitude, opts, 0.0, &[], &mut |_, _| {})
}

/// Propagate and record the state at each time in `times` (relative to the schedule start).
pub fn trajectory(
    model: &OperatorModel,
    state: &QuantumState,
    schedule: &GateSchedule,
    amplitude: f64,
    opts: &PropagationOptions,
    times: &[f64],
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(times.len());
    let mut seen = Vec::with_capacity(times.len());
    let basis = state.basis.clone();
    let p = propagate_observed(model, state, schedule, amplitude, opts, 0.0, times, &mut |t, psi| {
        seen.push(t);
        states.push(QuantumState { basis: basis.clone(), amplitudes: psi.to_vec() });
    })?;
    Ok(Trajectory { times: seen, states, final_state: p.state, norm_drift: p.norm_drift })
}

/// Core propagation loop. The schedule starts at absolute time `t_offset`, which fixes the phase
/// of the beat note and of the interaction-picture frame. `samples` are sorted times relative to
/// the schedule start; `observer` receives each with the state at that time.
#[allow(clippy::too_many_arguments)]
pub fn propagate_observed<O>(
    model: &OperatorModel,
    state: &QuantumState,
    schedule: &GateSchedule,
    amplitude: f64,
    opts: &PropagationOptions,
    t_offset: f64,
    samples: &[f64],
    observer: &mut O,
) -> Result<Propagation>
where
    O: FnMut(f64, &[C64]),
{
    if state.basis != model.basis {
        return Err(Error::Invalid("state register does not match the model".into()));
    }
    opts.validate()?;
    let basis = &model.basis;
    let n = basis.dim();
    let mut psi = state.amplitudes.clone();
    let mut ws = Workspace::new(basis);
    let mut integ = Dop853::new(n);
    let fast = model.fastest_frequency();
    let total = schedule.total_time();
    let h_max = match model.samples_per_period() {
        Some(_) if fast > 0.0 => 2.0 * PI / (opts.samples_per_period * fast),
        _ => f64::INFINITY,
    };
    let iopts = IntegratorOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max,
        h_min: 1e-12 * h_max.min(total.max(1e-30)),
        max_steps: opts.max_steps,
        freq_scale: fast,
    };
    let shift = model.qubit_shift;
    let mut stats = IntegratorStats::default();
    let mut drift: f64 = norm_dev(&psi);
    let mut t = 0.0;
    let mut next = 0;
    let env = schedule.envelope;
    for seg in &schedule.segments {
        let (s0, s1) = (seg.start(), seg.end());
        while next < samples.len() && samples[next] < s0 {
            let ts = samples[next].max(t);
            idle(basis, &mut psi, shift, ts - t);
            t = ts;
            observer(samples[next], &psi);
            next += 1;
        }
        idle(basis, &mut psi, shift, s0 - t);
        match *seg {
            Segment::Laser { start, duration, .. } => {
                let mut stops = Vec::new();
                let first = next;
                while next < samples.len() && samples[next] <= s1 {
                    stops.push(t_offset + samples[next]);
                    next += 1;
                }
                let rel = &samples[first..next];
                let mut idx = 0;
                let mut rhs = |tt: f64, y: &[C64], dy: &mut [C64]| {
                    let field = amplitude * env.field(tt - t_offset - start);
                    model.rhs(tt, field, y, dy, &mut ws);
                };
                let mut obs = |_tt: f64, y: &[C64]| {
                    drift = drift.max(norm_dev(y));
                    observer(rel[idx], y);
                    idx += 1;
                };
                integ.reset();
                stats += integ.integrate(
                    &mut rhs,
                    t_offset + start,
                    t_offset + start + duration,
                    &mut psi,
                    &iopts,
                    &stops,
                    &mut obs,
                )?;
            }
            Segment::Microwave { duration, rotation, .. } => {
                let u = if duration == 0.0 {
                    qubit_unitary([rotation.theta * rotation.phi.cos(), rotation.theta * rotation.phi.sin(), 0.0], 1.0)
                } else {
                    let w = rotation.theta / duration;
                    qubit_unitary([w * rotation.phi.cos(), w * rotation.phi.sin(), shift], duration)
                };
                apply_qubit_unitary(basis, &mut psi, 0, &u);
                apply_qubit_unitary(basis, &mut psi, 1, &u);
                while next < samples.len() && samples[next] <= s1 {
                    observer(samples[next], &psi);
                    next += 1;
                }
            }
        }
        t = s1;
        drift = drift.max(norm_dev(&psi));
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(t_offset + t));
        }
    }
    while next < samples.len() && samples[next] <= total {
        let ts = samples[next].max(t);
        idle(basis, &mut psi, shift, ts - t);
        t = ts;
        observer(samples[next], &psi);
        next += 1;
    }
    idle(basis, &mut psi, shift, total - t);
    drift = drift.max(norm_dev(&psi));
    Ok(Propagation {
        state: QuantumState { basis: basis.clone(), amplitudes: psi },
        stats,
        norm_drift: drift,
    })
}

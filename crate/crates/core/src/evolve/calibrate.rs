use serde::{Deserialize, Serialize};

use super::process::phase_at;
use super::propagate::PropagationOptions;
use crate::error::{Error, Result};
use crate::hamiltonian::OperatorModel;
use crate::pulse::GateSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationOptions {
    /// Search interval as multiples of the seed amplitude.
    pub bracket: [f64; 2],
    /// Tolerance on the per-loop phase in rad.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { bracket: [0.8, 1.25], tolerance: 1e-8, max_iterations: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub amplitude: f64,
    pub phase: f64,
    pub iterations: usize,
}

/// Find the amplitude scale on g that gives `target_phase` per loop.
///
/// The phase grows as the fourth power of the field, so the root is sought in Φ^{1/4}, where the
/// dependence is close to linear, by Illinois-modified regula falsi inside the bracket.
pub fn calibrate(
    model: &OperatorModel,
    schedule: &GateSchedule,
    target_phase: f64,
    seed: f64,
    opts: &CalibrationOptions,
    popts: &PropagationOptions,
) -> Result<Calibration> {
    if target_phase == 0.0 {
        return Ok(Calibration { amplitude: 0.0, phase: 0.0, iterations: 0 });
    }
    if !(target_phase > 0.0) || !(seed > 0.0) {
        return Err(Error::Calibration("target phase and seed amplitude must be positive".into()));
    }
    let root = target_phase.powf(0.25);
    let g = |s: f64| -> Result<(f64, f64)> {
        let phi = phase_at(model, schedule, s, target_phase, popts)?;
        Ok((phi, phi.signum() * phi.abs().powf(0.25) - root))
    };
    let (mut a, mut b) = (opts.bracket[0] * seed, opts.bracket[1] * seed);
    let (pa, mut fa) = g(a)?;
    let (pb, mut fb) = g(b)?;
    if fa.signum() == fb.signum() {
        return Err(Error::Calibration(format!(
            "phase {pa:.6} to {pb:.6} over amplitudes [{a:.6}, {b:.6}] does not bracket {target_phase:.6}"
        )));
    }
    let mut side = 0;
    for it in 1..=opts.max_iterations {
        let s = (a * fb - b * fa) / (fb - fa);
        let (phi, fs) = g(s)?;
        log::debug!("calibration step {it}: amplitude {s:.12} phase {phi:.12}");
        if (phi - target_phase).abs() < opts.tolerance {
            return Ok(Calibration { amplitude: s, phase: phi, iterations: it });
        }
        if fs.signum() == fb.signum() {
            b = s;
            fb = fs;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = s;
            fa = fs;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Calibration(format!("no convergence in {} iterations", opts.max_iterations)))
}

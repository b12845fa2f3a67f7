use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::{calibrate, CalibrationOptions};
use super::process::{gate_process, GateResult};
use super::propagate::propagate;
use super::state::QuantumState;
use crate::crystal::{beam_lamb_dicke, ModeId};
use crate::error::{Error, Result};
use crate::hamiltonian::{Tier, Truncation};
use crate::setup::GateSetup;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StagedOptions {
    pub spectator_cutoff: usize,
    /// Refine the calibrated amplitude by a three-point parabola in the gate error.
    pub refine: bool,
    /// Relative amplitude step of the refinement.
    pub refine_step: f64,
    pub calibration: CalibrationOptions,
}

impl Default for StagedOptions {
    fn default() -> Self {
        StagedOptions { spectator_cutoff: 1, refine: true, refine_step: 2e-3, calibration: CalibrationOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOne {
    pub amplitude: f64,
    pub calibrated_amplitude: f64,
    pub phase: f64,
    pub error: f64,
    pub leakage: f64,
    /// (amplitude, error) pairs evaluated while optimizing.
    pub evaluations: Vec<(f64, f64)>,
    pub result: GateResult,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadialStage {
    pub mode: ModeId,
    pub population: f64,
    /// False when the mode has no coupling to either beam and was not simulated.
    pub simulated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StagedError {
    pub tier: Tier,
    pub stage1: StageOne,
    pub radial: Vec<RadialStage>,
    pub radial_total: f64,
    pub total: f64,
}

fn stage<T>(k: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: k, source: Box::new(e) })
}

/// Off-resonant error by the three-stage spectator procedure: the gate error with the axial
/// c.o.m. mode as the only spectator at the optimal amplitude, plus the final population of each
/// radial mode simulated on its own at that amplitude.
pub fn staged_error(setup: &GateSetup, tier: Tier, opts: &StagedOptions) -> Result<StagedError> {
    let stage1 = stage(1, stage_one(setup, tier, opts))?;
    let radial = stage(2, radial_stage(setup, tier, opts, stage1.amplitude))?;
    let radial_total: f64 = radial.iter().map(|r| r.population).sum();
    Ok(StagedError { tier, total: stage1.error + radial_total, stage1, radial, radial_total })
}

fn stage_one(setup: &GateSetup, tier: Tier, opts: &StagedOptions) -> Result<StageOne> {
    let target = setup.process.target_phase;
    let s1 = setup.with_truncation(Truncation::with_spectator(
        setup.truncation.gate,
        ModeId::AXIAL_COM,
        opts.spectator_cutoff,
    ));
    let model = s1.build(tier)?;
    let seed = s1.seed_amplitude(tier, target)?;
    let cal = calibrate(&model, &s1.schedule, target, seed, &opts.calibration, s1.propagation())?;
    let eval = |a: f64| gate_process(&model, &s1.schedule, a, &s1.process);
    let mut best = eval(cal.amplitude)?;
    let mut evaluations = vec![(cal.amplitude, best.error)];
    if opts.refine && cal.amplitude > 0.0 {
        let h = opts.refine_step * cal.amplitude;
        let lo = eval(cal.amplitude - h)?;
        let hi = eval(cal.amplitude + h)?;
        evaluations.push((cal.amplitude - h, lo.error));
        evaluations.push((cal.amplitude + h, hi.error));
        let curv = 0.5 * (hi.error + lo.error - 2.0 * best.error);
        let slope = 0.5 * (hi.error - lo.error);
        let mut cands = vec![lo, hi];
        if curv > 0.0 {
            let x = (-slope / (2.0 * curv)).clamp(-2.0, 2.0);
            if x.abs() > 1e-3 && (x.abs() - 1.0).abs() > 1e-3 {
                let r = eval(cal.amplitude + x * h)?;
                evaluations.push((cal.amplitude + x * h, r.error));
                cands.push(r);
            }
        }
        for c in cands {
            if c.error < best.error {
                best = c;
            }
        }
    }
    Ok(StageOne {
        amplitude: best.amplitude,
        calibrated_amplitude: cal.amplitude,
        phase: best.phase,
        error: best.error,
        leakage: best.leakage,
        evaluations,
        result: best,
    })
}

fn radial_stage(setup: &GateSetup, tier: Tier, opts: &StagedOptions, amplitude: f64) -> Result<Vec<RadialStage>> {
    ModeId::RADIAL
        .iter()
        .map(|&mode| {
            let coupled = [setup.beams.k_a, setup.beams.k_b].iter().any(|&k| {
                beam_lamb_dicke(&setup.spectrum, k)
                    .iter()
                    .any(|(m, e)| *m == mode && (e[0] != 0.0 || e[1] != 0.0))
            });
            if !coupled || tier == Tier::Sdf {
                return Ok(RadialStage { mode, population: 0.0, simulated: false });
            }
            let s = setup.with_truncation(Truncation::with_spectator(
                setup.truncation.gate,
                mode,
                opts.spectator_cutoff,
            ));
            let model = s.build(tier)?;
            let pos = model.basis.mode_position(mode).ok_or_else(|| Error::UnknownMode(mode.to_string()))?;
            let pops = (0..4)
                .into_par_iter()
                .map(|k| {
                    let psi0 = QuantumState::qubit_basis(&model.basis, k, 0)?;
                    let out = propagate(&model, &psi0, &s.schedule, amplitude, s.propagation())?;
                    Ok(out.state.mode_excitation(pos))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(RadialStage { mode, population: pops.iter().sum::<f64>() / 4.0, simulated: true })
        })
        .collect()
}

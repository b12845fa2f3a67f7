use serde::Serialize;

use super::propagate::{propagate_observed, PropagationOptions};
use super::state::QuantumState;
use crate::error::Result;
use crate::hamiltonian::{BeamSelect, Level, OperatorModel};
use crate::pulse::GateSchedule;

#[derive(Debug, Clone, Serialize)]
pub struct LeakageResult {
    pub beams: BeamSelect,
    pub repetitions: usize,
    /// Population outside the qubit levels after each gate.
    pub history: Vec<f64>,
    /// Final population with at least one ion in e0.
    pub e0_population: f64,
    pub per_gate: f64,
}

/// Prepare |up, up> with the modes in vacuum and apply the gate `repetitions` times back to back
/// with only the selected beams, on a continuous clock.
pub fn leakage_experiment(
    model: &OperatorModel,
    schedule: &GateSchedule,
    amplitude: f64,
    beams: BeamSelect,
    repetitions: usize,
    popts: &PropagationOptions,
) -> Result<LeakageResult> {
    let model = if model.as_full().is_some() { model.with_beams(beams)? } else { model.clone() };
    let basis = &model.basis;
    let occ = vec![0; basis.modes.len()];
    let mut state = QuantumState::product(basis, Level::Up, Level::Up, &occ)?;
    let mut history = Vec::with_capacity(repetitions);
    let total = schedule.total_time();
    for r in 0..repetitions {
        let out = propagate_observed(
            &model,
            &state,
            schedule,
            amplitude,
            popts,
            r as f64 * total,
            &[],
            &mut |_, _| {},
        )?;
        state = out.state;
        history.push(state.excited_population());
    }
    let e0_population = match basis.level_index(Level::EZero) {
        Some(e0) => {
            let p = basis.phonon_dim();
            let l = basis.level_count();
            let mut s = 0.0;
            for a in 0..l {
                for b in 0..l {
                    if a == e0 || b == e0 {
                        let base = basis.pair_index(a, b) * p;
                        s += state.amplitudes[base..base + p].iter().map(|z| z.norm_sqr()).sum::<f64>();
                    }
                }
            }
            s
        }
        None => 0.0,
    };
    let last = history.last().copied().unwrap_or(0.0);
    Ok(LeakageResult {
        beams,
        repetitions,
        history,
        e0_population,
        per_gate: if repetitions > 0 { last / repetitions as f64 } else { 0.0 },
    })
}

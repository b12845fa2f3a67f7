use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::propagate::{propagate_observed, PropagationOptions};
use super::state::{excited_population, mode_excitation, QuantumState};
use crate::crystal::ModeId;
use crate::error::{Error, Result};
use crate::hamiltonian::{Basis, OperatorModel};
use crate::linalg::C64;
use crate::pulse::{GateSchedule, Segment};

/// A population that should vanish at the end of an ideal gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Both ions' optical excited states.
    DStates,
    /// Any excitation of a spectator mode.
    Mode(ModeId),
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::DStates => write!(f, "d-states"),
            Channel::Mode(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "d-states" {
            return Ok(Channel::DStates);
        }
        Ok(Channel::Mode(s.parse()?))
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransientOptions {
    /// Moving-average window in s; the period 2π/Δ of the full model when unset.
    pub window: Option<f64>,
    pub samples_per_window: usize,
}

impl Default for TransientOptions {
    fn default() -> Self {
        TransientOptions { window: None, samples_per_window: 20 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelTrace {
    pub channel: Channel,
    pub raw: Vec<f64>,
    pub filtered: Vec<f64>,
    /// Unfiltered population at the end of the gate.
    pub final_value: f64,
    /// Mean of the filtered trace over the flat tops of the laser pulses.
    pub plateau_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transients {
    pub times: Vec<f64>,
    pub window: f64,
    pub channels: Vec<ChannelTrace>,
}

impl Transients {
    pub fn channel(&self, c: Channel) -> Option<&ChannelTrace> {
        self.channels.iter().find(|t| t.channel == c)
    }
}

/// Centered moving average over `w` samples, shrinking at the ends.
pub fn moving_average(v: &[f64], w: usize) -> Vec<f64> {
    let n = v.len();
    if n == 0 || w <= 1 {
        return v.to_vec();
    }
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + v[i];
    }
    let half = w / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + w - half).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn channel_value(basis: &Basis, psi: &[C64], c: Channel) -> f64 {
    match c {
        Channel::DStates => excited_population(basis, psi),
        Channel::Mode(m) => basis.mode_position(m).map(|k| mode_excitation(basis, psi, k)).unwrap_or(0.0),
    }
}

fn check_channels(model: &OperatorModel, channels: &[Channel]) -> Result<()> {
    for c in channels {
        match c {
            Channel::DStates => {}
            Channel::Mode(m) if *m == ModeId::GATE => {
                return Err(Error::Invalid("the gate mode is not a transient channel".into()))
            }
            Channel::Mode(m) => {
                if model.basis.mode_position(*m).is_none() {
                    return Err(Error::UnknownMode(m.to_string()));
                }
            }
        }
    }
    Ok(())
}

/// Channel populations through the gate averaged over the four qubit basis inputs, with the
/// moving-average filter applied.
pub fn transient_populations(
    model: &OperatorModel,
    schedule: &GateSchedule,
    amplitude: f64,
    channels: &[Channel],
    opts: &TransientOptions,
    popts: &PropagationOptions,
) -> Result<Transients> {
    check_channels(model, channels)?;
    let window = match (opts.window, model.as_full()) {
        (Some(w), _) => w,
        (None, Some(f)) => 2.0 * PI / f.delta(),
        (None, None) => schedule.total_time() / 200.0,
    };
    if !(window > 0.0) || opts.samples_per_window == 0 {
        return Err(Error::config("transient", "window and samples per window must be positive"));
    }
    let dt = window / opts.samples_per_window as f64;
    let total = schedule.total_time();
    let n = (total / dt).floor() as usize + 1;
    let mut times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    if total - times[n - 1] > 1e-3 * dt {
        times.push(total);
    }
    let basis = &model.basis;
    let runs: Vec<Vec<Vec<f64>>> = (0..4)
        .into_par_iter()
        .map(|s| {
            let psi0 = QuantumState::qubit_basis(basis, s, 0)?;
            let mut rows = vec![Vec::with_capacity(times.len()); channels.len()];
            propagate_observed(model, &psi0, schedule, amplitude, popts, 0.0, &times, &mut |_, psi| {
                for (k, c) in channels.iter().enumerate() {
                    rows[k].push(channel_value(basis, psi, *c));
                }
            })?;
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let flat = flat_top_mask(schedule, &times);
    let w = opts.samples_per_window;
    let traces = channels
        .iter()
        .enumerate()
        .map(|(k, &channel)| {
            let raw: Vec<f64> =
                (0..times.len()).map(|i| runs.iter().map(|r| r[k][i]).sum::<f64>() / 4.0).collect();
            let filtered = moving_average(&raw, w);
            let (sum, cnt) = filtered
                .iter()
                .zip(&flat)
                .filter(|(_, &f)| f)
                .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
            ChannelTrace {
                channel,
                final_value: *raw.last().unwrap_or(&0.0),
                plateau_mean: if cnt > 0 { sum / cnt as f64 } else { 0.0 },
                raw,
                filtered,
            }
        })
        .collect();
    Ok(Transients { times, window, channels: traces })
}

/// Samples that lie on the flat top of a laser pulse, one filter window away from the ramps.
fn flat_top_mask(schedule: &GateSchedule, times: &[f64]) -> Vec<bool> {
    let env = &schedule.envelope;
    let ramp = env.duration() - env.loop_duration;
    times
        .iter()
        .map(|&t| {
            schedule.segments.iter().any(|s| match *s {
                Segment::Laser { start, duration, .. } => {
                    let margin = ramp + 0.05 * duration;
                    t >= start + margin && t <= start + duration - margin
                }
                _ => false,
            })
        })
        .collect()
}

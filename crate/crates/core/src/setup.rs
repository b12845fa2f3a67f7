//! A complete gate configuration in library units, and the models built from it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::crystal::{commensurate_spacing, lamb_dicke, normal_modes, BeamGeometry, ModeId, ModeSpectrum, TrapConfig};
use crate::error::{Error, Result};
use crate::evolve::{PropagationOptions, ProcessOptions};
use crate::hamiltonian::{
    build_full, build_lightshift, build_sdf, lightshift_prefactor, BeamPair, LevelScheme, OperatorModel, Tier,
    Truncation,
};
use crate::pulse::{make_schedule_with, GateSchedule, MicrowaveModel, PulseEnvelope};

/// Which side of the stretch mode the beat note sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeatSide {
    /// μ = ω_str − δ, giving a positive geometric phase on the odd-parity states.
    #[default]
    Below,
    Above,
}

#[derive(Debug, Clone)]
pub struct GateSetup {
    pub trap: TrapConfig,
    pub spectrum: ModeSpectrum,
    pub beams: BeamPair,
    pub scheme: LevelScheme,
    pub schedule: GateSchedule,
    pub truncation: Truncation,
    pub max_dim: usize,
    pub warn_ratio: f64,
    pub process: ProcessOptions,
}

/// Inputs for [`GateSetup::new`].
#[derive(Debug, Clone)]
pub struct SetupParams {
    pub trap: TrapConfig,
    pub wavelength: f64,
    pub geometry: BeamGeometry,
    /// Move the ions to the nearest spacing with Δk·d a multiple of 2π.
    pub commensurate: bool,
    pub g: f64,
    pub beat_side: BeatSide,
    pub beat_phase: f64,
    pub e0_leak_rabi: f64,
    pub include_e0: bool,
    /// Overrides the Zeeman detuning when set.
    pub delta: Option<f64>,
    pub loops: usize,
    pub t_loop: f64,
    pub t_pi: f64,
    pub echo: bool,
    pub envelope: PulseEnvelope,
    pub microwave: MicrowaveModel,
    pub truncation: Truncation,
    pub max_dim: usize,
    pub warn_ratio: f64,
    pub process: ProcessOptions,
}

impl SetupParams {
    pub fn paper_defaults() -> Self {
        let t_loop = 45e-6;
        SetupParams {
            trap: TrapConfig::paper_defaults(),
            wavelength: 435.5e-9,
            geometry: BeamGeometry::Perpendicular { transverse_angle: PI / 4.0 },
            commensurate: true,
            g: 2.0 * PI * 0.76e6,
            beat_side: BeatSide::Below,
            beat_phase: 0.0,
            e0_leak_rabi: 0.0,
            include_e0: false,
            delta: None,
            loops: 2,
            t_loop,
            t_pi: 5e-6,
            echo: true,
            envelope: PulseEnvelope::sin2(t_loop, 2e-6),
            microwave: MicrowaveModel::default(),
            truncation: Truncation::all_spectators(10, 1),
            max_dim: 10_000,
            warn_ratio: 0.2,
            process: ProcessOptions::default(),
        }
    }
}

impl GateSetup {
    pub fn new(p: &SetupParams) -> Result<Self> {
        p.trap.validate()?;
        if !(p.wavelength > 0.0) {
            return Err(Error::config("beams.wavelength_m", "must be positive"));
        }
        let mut spectrum = normal_modes(&p.trap)?;
        let (k_a, k_b) = p.geometry.wave_vectors(p.wavelength);
        let dk_x = k_a[0] - k_b[0];
        if p.commensurate {
            spectrum = spectrum.with_spacing(commensurate_spacing(spectrum.spacing(), dk_x));
        }
        let schedule = make_schedule_with(p.loops, p.t_loop, p.t_pi, p.echo, p.envelope, p.microwave)?;
        let w_str = spectrum.frequency(ModeId::GATE)?;
        let mu = match p.beat_side {
            BeatSide::Below => w_str - schedule.delta,
            BeatSide::Above => w_str + schedule.delta,
        };
        let mut beams = BeamPair::new(p.g, mu, k_a, k_b);
        beams.phi_a = p.beat_phase;
        beams.e0_leak_rabi = p.e0_leak_rabi;
        let mut scheme = LevelScheme::from_field(p.trap.magnetic_field);
        if let Some(d) = p.delta {
            scheme.delta = d;
        }
        scheme.include_e0 = p.include_e0 || p.e0_leak_rabi != 0.0;
        Ok(GateSetup {
            trap: p.trap,
            spectrum,
            beams,
            scheme,
            schedule,
            truncation: p.truncation.clone(),
            max_dim: p.max_dim,
            warn_ratio: p.warn_ratio,
            process: p.process,
        })
    }

    pub fn paper_defaults() -> Result<Self> {
        Self::new(&SetupParams::paper_defaults())
    }

    pub fn with_truncation(&self, truncation: Truncation) -> Self {
        GateSetup { truncation, ..self.clone() }
    }

    pub fn with_schedule(&self, schedule: GateSchedule) -> Self {
        GateSetup { schedule, ..self.clone() }
    }

    pub fn propagation(&self) -> &PropagationOptions {
        &self.process.propagation
    }

    pub fn build(&self, tier: Tier) -> Result<OperatorModel> {
        match tier {
            Tier::Full => build_full(&self.spectrum, &self.beams, &self.scheme, &self.truncation, self.max_dim),
            Tier::LightShift => build_lightshift(
                &self.spectrum,
                &self.beams,
                &self.scheme,
                &self.truncation,
                self.max_dim,
                self.warn_ratio,
            ),
            Tier::Sdf => build_sdf(
                &self.spectrum,
                &self.beams,
                &self.scheme,
                &Truncation::gate_only(self.truncation.gate),
                self.max_dim,
            ),
        }
    }

    /// Gate-mode Lamb-Dicke parameter η.
    pub fn gate_eta(&self) -> Result<f64> {
        Ok(lamb_dicke(&self.spectrum, self.beams.delta_k())?.gate())
    }

    /// Signed detuning μ − ω_str.
    pub fn detuning(&self) -> Result<f64> {
        Ok(self.beams.mu - self.spectrum.frequency(ModeId::GATE)?)
    }

    /// Light-shift scale Ω of the tier at unit amplitude: g²/Δ for the reduced model, and the
    /// quarter of the full light-shift prefactor otherwise.
    pub fn nominal_omega(&self, tier: Tier) -> Result<f64> {
        let g = self.beams.g();
        match tier {
            Tier::Sdf => Ok(g * g / self.scheme.delta),
            _ => Ok(0.25 * lightshift_prefactor(g, self.scheme.delta, self.beams.mu)?),
        }
    }

    /// Per-loop phase predicted from the closed-form loop at amplitude `s`, with the ramps
    /// accounted for through the force area.
    pub fn predicted_phase(&self, tier: Tier, s: f64) -> Result<f64> {
        let eta_eff = 2.0 * self.gate_eta()?;
        let delta = self.detuning()?.abs();
        let omega = self.nominal_omega(tier)? * s * s;
        let env = &self.schedule.envelope;
        let f = eta_eff * omega * env.force_area() / self.schedule.t_loop;
        Ok(2.0 * PI * (f / delta).powi(2))
    }

    /// Amplitude expected to give `target` per loop, used to seed calibration.
    pub fn seed_amplitude(&self, tier: Tier, target: f64) -> Result<f64> {
        if target <= 0.0 {
            return Ok(0.0);
        }
        let p1 = self.predicted_phase(tier, 1.0)?;
        if !(p1 > 0.0) {
            return Err(Error::Calibration("the gate mode is not driven at unit amplitude".into()));
        }
        Ok((target / p1).powf(0.25))
    }
}

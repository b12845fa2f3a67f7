//! Run configuration: a TOML document in ordinary units (Hz, s, m, W, gauss).

use std::f64::consts::PI;

use lsgate::crystal::{BeamGeometry, ModeId, TrapConfig};
use lsgate::error_budget::{BudgetInputs, Provenance};
use lsgate::evolve::{Channel, ProcessOptions, PropagationOptions, StagedOptions, TransientOptions};
use lsgate::hamiltonian::{Tier, Truncation};
use lsgate::pulse::{AmplitudeMode, EnvelopeShape, MicrowaveModel, PulseEnvelope};
use lsgate::setup::{BeatSide, SetupParams};
use lsgate::srb::{FitOptions, SrbSettings};
use lsgate::units::{hz_to_rad, AMU};
use lsgate::Error;
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub output_dir: String,
    pub trap: TrapSection,
    pub beams: BeamSection,
    pub scheme: SchemeSection,
    pub schedule: ScheduleSection,
    pub truncation: TruncationSection,
    pub simulation: SimulationSection,
    pub populations: PopulationSection,
    pub budget: BudgetSection,
    pub srb: SrbSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapSection {
    pub axial_hz: f64,
    pub radial_y_hz: f64,
    pub radial_z_hz: f64,
    pub mass_amu: f64,
    pub magnetic_field_gauss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Perpendicular,
    CounterPropagating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub wavelength_m: f64,
    pub geometry: GeometryKind,
    /// Azimuth of the common transverse wave-vector component, measured from y.
    pub transverse_angle_rad: f64,
    pub commensurate: bool,
    /// Single-photon Rabi frequency at the reference power.
    pub g_hz: f64,
    /// Power per beam. When set, g scales as the square root of power / reference power.
    pub power_w: Option<f64>,
    pub reference_power_w: f64,
    pub beat_side: BeatSide,
    pub beat_phase_rad: f64,
    /// Rabi frequency of the stray up -> e0 coupling of beam A.
    pub e0_leak_rabi_hz: f64,
    pub include_e0: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    /// Detuning of e± from the mean laser frequency; derived from the field when absent.
    pub delta_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub loops: usize,
    pub t_loop_s: f64,
    pub t_pi_s: f64,
    pub echo: bool,
    pub envelope: EnvelopeShape,
    pub ramp_s: f64,
    pub amplitude: AmplitudeMode,
    pub microwave_duration_s: f64,
    pub microwave_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSection {
    pub gate: usize,
    pub spectator: usize,
    /// Spectator modes by label, e.g. "x-com" or "z-stretch".
    pub spectators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub tier: Tier,
    pub max_dim: usize,
    pub warn_ratio: f64,
    pub rtol: f64,
    pub atol: f64,
    pub samples_per_period: f64,
    pub max_steps: usize,
    pub frame_optimize: bool,
    pub nbar: f64,
    pub refine: bool,
    pub refine_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSection {
    pub channels: Vec<String>,
    /// Moving-average window; one period of the detuning when absent.
    pub window_s: Option<f64>,
    pub samples_per_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub d_lifetime_s: f64,
    pub eta: f64,
    pub t_gate_s: f64,
    pub power_w: f64,
    pub eps_scatter_min: f64,
    /// Off-resonant plus Lamb-Dicke error; simulated when `simulate_off_resonant` is set.
    pub off_resonant: f64,
    pub simulate_off_resonant: bool,
    pub leakage_a: f64,
    pub leakage_b: f64,
    pub eps_ramsey: f64,
    pub kappa_gate_per_s: f64,
    pub kappa_com_per_s: f64,
    pub p_com: f64,
    pub microwave_error: f64,
    pub microwave_pulses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrbNoiseKind {
    Ideal,
    Clifford,
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsSource {
    Ideal,
    Depolarizing,
    /// Channel of the gate simulated at the configured tier.
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrbSection {
    pub lengths: Vec<usize>,
    pub sequences: usize,
    pub shots: u64,
    pub noise: SrbNoiseKind,
    pub clifford_error: f64,
    pub ls: LsSource,
    pub ls_error: f64,
    pub single_qubit_error: f64,
    pub free_asymptote: bool,
    pub gap_lengths: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::paper_defaults()
    }
}

impl RunConfig {
    /// Every parameter of the gate demonstration.
    pub fn paper_defaults() -> Self {
        RunConfig {
            version: VERSION,
            seed: 0,
            output_dir: "out".into(),
            trap: TrapSection::default(),
            beams: BeamSection::default(),
            scheme: SchemeSection::default(),
            schedule: ScheduleSection::default(),
            truncation: TruncationSection::default(),
            simulation: SimulationSection::default(),
            populations: PopulationSection::default(),
            budget: BudgetSection::default(),
            srb: SrbSection::default(),
        }
    }
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection { axial_hz: 1.16e6, radial_y_hz: 2.57e6, radial_z_hz: 3.05e6, mass_amu: 171.0, magnetic_field_gauss: 5.57 }
    }
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            wavelength_m: 435.5e-9,
            geometry: GeometryKind::Perpendicular,
            transverse_angle_rad: PI / 4.0,
            commensurate: true,
            g_hz: 0.76e6,
            power_w: None,
            reference_power_w: 0.05,
            beat_side: BeatSide::Below,
            beat_phase_rad: 0.0,
            e0_leak_rabi_hz: 0.0,
            include_e0: false,
        }
    }
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection { delta_hz: None }
    }
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            loops: 2,
            t_loop_s: 45e-6,
            t_pi_s: 5e-6,
            echo: true,
            envelope: EnvelopeShape::Sin2Ramp,
            ramp_s: 2e-6,
            amplitude: AmplitudeMode::Field,
            microwave_duration_s: 0.0,
            microwave_error: 0.0,
        }
    }
}

impl Default for TruncationSection {
    fn default() -> Self {
        let mut spectators = vec![ModeId::AXIAL_COM.to_string()];
        spectators.extend(ModeId::RADIAL.iter().map(|m| m.to_string()));
        TruncationSection { gate: 10, spectator: 1, spectators }
    }
}

impl Default for SimulationSection {
    fn default() -> Self {
        let p = PropagationOptions::default();
        let s = StagedOptions::default();
        SimulationSection {
            tier: Tier::Full,
            max_dim: 10_000,
            warn_ratio: 0.2,
            rtol: p.rtol,
            atol: p.atol,
            samples_per_period: p.samples_per_period,
            max_steps: p.max_steps,
            frame_optimize: false,
            nbar: 0.0,
            refine: s.refine,
            refine_step: s.refine_step,
        }
    }
}

impl Default for PopulationSection {
    fn default() -> Self {
        PopulationSection {
            channels: vec!["d-states".into(), ModeId::AXIAL_COM.to_string()],
            window_s: None,
            samples_per_window: 20,
        }
    }
}

impl Default for BudgetSection {
    fn default() -> Self {
        let p = BudgetInputs::presets();
        BudgetSection {
            d_lifetime_s: 52.7e-3,
            eta: p.eta.unwrap_or_default(),
            t_gate_s: 100e-6,
            power_w: 0.1,
            eps_scatter_min: 7e-6,
            off_resonant: 0.2e-4,
            simulate_off_resonant: false,
            leakage_a: 1.7e-4,
            leakage_b: 0.7e-4,
            eps_ramsey: 0.21,
            kappa_gate_per_s: 15.0,
            kappa_com_per_s: 3e3,
            p_com: 3e-4,
            microwave_error: 9e-5,
            microwave_pulses: 2,
        }
    }
}

impl Default for SrbSection {
    fn default() -> Self {
        SrbSection {
            lengths: vec![1, 3, 7],
            sequences: 33,
            shots: 0,
            noise: SrbNoiseKind::Native,
            clifford_error: 0.0,
            ls: LsSource::Depolarizing,
            ls_error: 2.6e-3,
            single_qubit_error: 9e-5,
            free_asymptote: false,
            gap_lengths: vec![10, 65],
        }
    }
}

fn positive(path: &str, v: f64) -> lsgate::Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config { path: path.into(), reason: format!("must be positive, got {v}") })
    }
}

impl RunConfig {
    /// Checks that do not fit the type system. Library constructors validate the rest.
    pub fn validate(&self) -> lsgate::Result<()> {
        if self.version != VERSION {
            return Err(Error::Config { path: "version".into(), reason: format!("unsupported version {}", self.version) });
        }
        positive("trap.axial_hz", self.trap.axial_hz)?;
        positive("trap.radial_y_hz", self.trap.radial_y_hz)?;
        positive("trap.radial_z_hz", self.trap.radial_z_hz)?;
        positive("trap.mass_amu", self.trap.mass_amu)?;
        positive("beams.wavelength_m", self.beams.wavelength_m)?;
        positive("beams.g_hz", self.beams.g_hz)?;
        positive("beams.reference_power_w", self.beams.reference_power_w)?;
        if let Some(p) = self.beams.power_w {
            positive("beams.power_w", p)?;
        }
        if let Some(d) = self.scheme.delta_hz {
            positive("scheme.delta_hz", d)?;
        }
        positive("schedule.t_loop_s", self.schedule.t_loop_s)?;
        if let Some(w) = self.populations.window_s {
            positive("populations.window_s", w)?;
        }
        for (i, m) in self.truncation.spectators.iter().enumerate() {
            m.parse::<ModeId>().map_err(|e| Error::Config {
                path: format!("truncation.spectators[{i}]"),
                reason: e.to_string(),
            })?;
        }
        for (i, c) in self.populations.channels.iter().enumerate() {
            c.parse::<Channel>().map_err(|e| Error::Config {
                path: format!("populations.channels[{i}]"),
                reason: e.to_string(),
            })?;
        }
        self.srb_settings().validate()?;
        Ok(())
    }

    /// Coupling g in rad/s after power scaling.
    pub fn g(&self) -> f64 {
        let scale = self.beams.power_w.map_or(1.0, |p| (p / self.beams.reference_power_w).sqrt());
        hz_to_rad(self.beams.g_hz) * scale
    }

    pub fn truncation(&self) -> lsgate::Result<Truncation> {
        let spectators = self
            .truncation
            .spectators
            .iter()
            .map(|m| m.parse::<ModeId>().map(|id| (id, self.truncation.spectator)))
            .collect::<lsgate::Result<Vec<_>>>()?;
        Ok(Truncation { gate: self.truncation.gate, spectators })
    }

    pub fn propagation(&self) -> PropagationOptions {
        let s = &self.simulation;
        PropagationOptions {
            rtol: s.rtol,
            atol: s.atol,
            samples_per_period: s.samples_per_period,
            max_steps: s.max_steps,
        }
    }

    pub fn setup_params(&self) -> lsgate::Result<SetupParams> {
        let t = &self.trap;
        let b = &self.beams;
        let s = &self.schedule;
        let envelope = match s.envelope {
            EnvelopeShape::Square => PulseEnvelope::square(s.t_loop_s),
            EnvelopeShape::Sin2Ramp => PulseEnvelope::sin2(s.t_loop_s, s.ramp_s),
        };
        let envelope = PulseEnvelope { amplitude: s.amplitude, ..envelope };
        let geometry = match b.geometry {
            GeometryKind::Perpendicular => BeamGeometry::Perpendicular { transverse_angle: b.transverse_angle_rad },
            GeometryKind::CounterPropagating => BeamGeometry::CounterPropagating,
        };
        let process = ProcessOptions {
            frame_optimize: self.simulation.frame_optimize,
            nbar: self.simulation.nbar,
            propagation: self.propagation(),
            ..ProcessOptions::default()
        };
        Ok(SetupParams {
            trap: TrapConfig {
                axial_freq: hz_to_rad(t.axial_hz),
                radial_freq_y: hz_to_rad(t.radial_y_hz),
                radial_freq_z: hz_to_rad(t.radial_z_hz),
                ion_mass: t.mass_amu * AMU,
                ion_count: 2,
                magnetic_field: t.magnetic_field_gauss,
            },
            wavelength: b.wavelength_m,
            geometry,
            commensurate: b.commensurate,
            g: self.g(),
            beat_side: b.beat_side,
            beat_phase: b.beat_phase_rad,
            e0_leak_rabi: hz_to_rad(b.e0_leak_rabi_hz),
            include_e0: b.include_e0,
            delta: self.scheme.delta_hz.map(hz_to_rad),
            loops: s.loops,
            t_loop: s.t_loop_s,
            t_pi: s.t_pi_s,
            echo: s.echo,
            envelope,
            microwave: MicrowaveModel { duration: s.microwave_duration_s, depolarizing_error: s.microwave_error },
            truncation: self.truncation()?,
            max_dim: self.simulation.max_dim,
            warn_ratio: self.simulation.warn_ratio,
            process,
        })
    }

    pub fn staged_options(&self) -> StagedOptions {
        StagedOptions {
            spectator_cutoff: self.truncation.spectator,
            refine: self.simulation.refine,
            refine_step: self.simulation.refine_step,
            ..StagedOptions::default()
        }
    }

    pub fn channels(&self) -> lsgate::Result<Vec<Channel>> {
        self.populations.channels.iter().map(|c| c.parse::<Channel>()).collect()
    }

    pub fn transient_options(&self) -> TransientOptions {
        TransientOptions { window: self.populations.window_s, samples_per_window: self.populations.samples_per_window }
    }

    /// Budget inputs; the detuning and coupling follow the beam section.
    pub fn budget_inputs(&self, delta: f64) -> BudgetInputs {
        let b = &self.budget;
        BudgetInputs {
            gamma_d: Some(1.0 / b.d_lifetime_s),
            delta: Some(delta),
            loops: Some(self.schedule.loops),
            eta: Some(b.eta),
            g: Some(self.g()),
            t_gate: Some(b.t_gate_s),
            power: Some(b.power_w),
            eps_scatter_min: Some(b.eps_scatter_min),
            off_resonant: Some(b.off_resonant),
            off_resonant_provenance: Some(Provenance::ExternalInput),
            leakage_a: Some(b.leakage_a),
            leakage_b: Some(b.leakage_b),
            eps_ramsey: Some(b.eps_ramsey),
            kappa_gate: Some(b.kappa_gate_per_s),
            kappa_com: Some(b.kappa_com_per_s),
            p_com: Some(b.p_com),
            p_com_provenance: Some(Provenance::ExternalInput),
            microwave_error: Some(b.microwave_error),
            microwave_pulses: Some(b.microwave_pulses),
        }
    }

    pub fn srb_settings(&self) -> SrbSettings {
        SrbSettings { lengths: self.srb.lengths.clone(), sequences: self.srb.sequences, shots: self.srb.shots, seed: self.seed }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions { free_asymptote: self.srb.free_asymptote, single_qubit_error: self.srb.single_qubit_error, counts: None }
    }
}

/// Parses a document, applies `key=value` overrides, and deserializes it. Errors name the
/// offending key path.
pub fn load(text: &str, overrides: &[String]) -> lsgate::Result<RunConfig> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
        path: "<document>".into(),
        reason: e.message().to_string(),
    })?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    from_table(doc)
}

/// Deserializes and validates a parsed document.
pub fn from_table(doc: toml::Table) -> lsgate::Result<RunConfig> {
    let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| Error::Config {
        path: e.path().to_string(),
        reason: e.inner().message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Sets `path = value` in the document. The value is read as TOML and falls back to a string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> lsgate::Result<()> {
    let Some((path, raw)) = assignment.split_once('=') else {
        return Err(Error::Config { path: assignment.into(), reason: "override must look like key=value".into() });
    };
    let path = path.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    set_path(doc, path, value)
}

pub fn set_path(doc: &mut toml::Table, path: &str, value: toml::Value) -> lsgate::Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config { path: path.into(), reason: "empty key in path".into() });
    }
    let mut table = doc;
    for k in &keys[..keys.len() - 1] {
        let entry = table.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| Error::Config {
            path: path.into(),
            reason: format!("`{k}` is not a table"),
        })?;
    }
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// The configuration as a TOML document.
pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration serializes")
}

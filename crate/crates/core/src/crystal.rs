//! Two-ion Coulomb crystal: equilibrium geometry, normal modes and Lamb-Dicke parameters.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{AMU, ELEMENTARY_CHARGE, EPSILON_0, HBAR};

/// Harmonic trap holding a two-ion crystal. Frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub axial_freq: f64,
    pub radial_freq_y: f64,
    pub radial_freq_z: f64,
    /// Ion mass in kg.
    pub ion_mass: f64,
    pub ion_count: usize,
    /// Magnetic field in gauss.
    pub magnetic_field: f64,
}

impl TrapConfig {
    /// The 171Yb+ trap used for the gate demonstration.
    pub fn paper_defaults() -> Self {
        TrapConfig {
            axial_freq: 2.0 * PI * 1.16e6,
            radial_freq_y: 2.0 * PI * 2.57e6,
            radial_freq_z: 2.0 * PI * 3.05e6,
            ion_mass: 171.0 * AMU,
            ion_count: 2,
            magnetic_field: 5.57,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ion_count != 2 {
            return Err(Error::config("trap.ion_count", "only two-ion crystals are supported"));
        }
        for (name, v) in [
            ("trap.axial_freq_hz", self.axial_freq),
            ("trap.radial_freq_y_hz", self.radial_freq_y),
            ("trap.radial_freq_z_hz", self.radial_freq_z),
            ("trap.ion_mass_kg", self.ion_mass),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if !(self.magnetic_field.is_finite() && self.magnetic_field >= 0.0) {
            return Err(Error::config("trap.magnetic_field_gauss", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Com,
    #[serde(rename = "str")]
    Stretch,
}

/// Identifies a normal mode by axis and symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId {
    pub axis: Axis,
    pub kind: ModeKind,
}

impl ModeId {
    pub const GATE: ModeId = ModeId { axis: Axis::X, kind: ModeKind::Stretch };
    pub const AXIAL_COM: ModeId = ModeId { axis: Axis::X, kind: ModeKind::Com };
    pub const RADIAL: [ModeId; 4] = [
        ModeId { axis: Axis::Y, kind: ModeKind::Com },
        ModeId { axis: Axis::Y, kind: ModeKind::Stretch },
        ModeId { axis: Axis::Z, kind: ModeKind::Com },
        ModeId { axis: Axis::Z, kind: ModeKind::Stretch },
    ];

    pub fn new(axis: Axis, kind: ModeKind) -> Self {
        ModeId { axis, kind }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.axis {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        let k = match self.kind {
            ModeKind::Com => "com",
            ModeKind::Stretch => "str",
        };
        write!(f, "{a}-{k}")
    }
}

impl std::str::FromStr for ModeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, k) = s
            .split_once('-')
            .ok_or_else(|| Error::Invalid(format!("mode label `{s}` is not of the form axis-kind")))?;
        let axis = match a {
            "x" => Axis::X,
            "y" => Axis::Y,
            "z" => Axis::Z,
            _ => return Err(Error::Invalid(format!("unknown axis `{a}`"))),
        };
        let kind = match k {
            "com" => ModeKind::Com,
            "str" | "stretch" => ModeKind::Stretch,
            _ => return Err(Error::Invalid(format!("unknown mode kind `{k}`"))),
        };
        Ok(ModeId { axis, kind })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub axis: Axis,
    pub label: ModeKind,
    /// Angular frequency in rad/s.
    pub frequency: f64,
    /// Participation of ion 1 and ion 2.
    pub participation: [f64; 2],
}

impl Mode {
    pub fn id(&self) -> ModeId {
        ModeId { axis: self.axis, kind: self.label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub modes: Vec<Mode>,
    /// Equilibrium positions along the trap axis in m.
    pub equilibrium_positions: [f64; 2],
    pub ion_mass: f64,
}

impl ModeSpectrum {
    pub fn mode(&self, id: ModeId) -> Result<&Mode> {
        self.modes
            .iter()
            .find(|m| m.id() == id)
            .ok_or_else(|| Error::UnknownMode(id.to_string()))
    }

    pub fn frequency(&self, id: ModeId) -> Result<f64> {
        Ok(self.mode(id)?.frequency)
    }

    pub fn spacing(&self) -> f64 {
        self.equilibrium_positions[1] - self.equilibrium_positions[0]
    }

    /// Copy of the spectrum with the ions moved to ±d/2.
    pub fn with_spacing(&self, d: f64) -> ModeSpectrum {
        let mut s = self.clone();
        s.equilibrium_positions = [-d / 2.0, d / 2.0];
        s
    }
}

/// Equilibrium separation of two ions in a harmonic well of axial frequency `omega_x`.
pub fn equilibrium_spacing(mass: f64, omega_x: f64) -> f64 {
    let e2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
    (e2 / (2.0 * PI * EPSILON_0 * mass * omega_x * omega_x)).cbrt()
}

fn diagonalize(k: Matrix2<f64>) -> [(f64, [f64; 2]); 2] {
    let eig = SymmetricEigen::new(k);
    let mut out = [(0.0, [0.0; 2]); 2];
    for i in 0..2 {
        let v = eig.eigenvectors.column(i);
        let mut b = [v[0], v[1]];
        let flip = if (b[0] + b[1]).abs() > 1e-9 { b[0] + b[1] < 0.0 } else { b[0] > 0.0 };
        if flip {
            b = [-b[0], -b[1]];
        }
        out[i] = (eig.eigenvalues[i], b);
    }
    out
}

/// Normal modes of the two-ion crystal from the Hessian of the trap plus Coulomb potential.
pub fn normal_modes(trap: &TrapConfig) -> Result<ModeSpectrum> {
    trap.validate()?;
    let m = trap.ion_mass;
    let wx = trap.axial_freq;
    for (name, w) in [("y", trap.radial_freq_y), ("z", trap.radial_freq_z)] {
        if w <= wx {
            return Err(Error::Instability(format!(
                "radial {name} frequency {:.6e} rad/s does not exceed the axial frequency {:.6e} rad/s; \
                 the linear chain is not the equilibrium",
                w, wx
            )));
        }
    }
    let d = equilibrium_spacing(m, wx);
    let wx2 = wx * wx;
    let mut modes = Vec::with_capacity(6);
    for axis in Axis::ALL {
        // mass-weighted Hessian divided by m
        let k = match axis {
            Axis::X => Matrix2::new(2.0 * wx2, -wx2, -wx2, 2.0 * wx2),
            Axis::Y | Axis::Z => {
                let wr = if axis == Axis::Y { trap.radial_freq_y } else { trap.radial_freq_z };
                let wr2 = wr * wr;
                Matrix2::new(wr2 - wx2 / 2.0, wx2 / 2.0, wx2 / 2.0, wr2 - wx2 / 2.0)
            }
        };
        let mut pair = diagonalize(k);
        pair.sort_by(|a, b| {
            let sa = a.1[0] * a.1[1] > 0.0;
            let sb = b.1[0] * b.1[1] > 0.0;
            sb.cmp(&sa)
        });
        for (ev, b) in pair {
            if ev <= 0.0 {
                return Err(Error::Instability(format!("non-positive curvature along {axis:?}")));
            }
            let label = if b[0] * b[1] > 0.0 { ModeKind::Com } else { ModeKind::Stretch };
            modes.push(Mode { axis, label, frequency: ev.sqrt(), participation: b });
        }
    }
    Ok(ModeSpectrum { modes, equilibrium_positions: [-d / 2.0, d / 2.0], ion_mass: m })
}

/// Lamb-Dicke parameters for a wave vector acting on the crystal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambDickeSet {
    pub delta_k: [f64; 3],
    /// Per mode, the parameter for ion 1 and ion 2.
    pub entries: Vec<(ModeId, [f64; 2])>,
    gate: f64,
}

impl LambDickeSet {
    pub fn eta(&self, ion: usize, mode: ModeId) -> Result<f64> {
        self.entries
            .iter()
            .find(|(id, _)| *id == mode)
            .map(|(_, e)| e[ion])
            .ok_or_else(|| Error::UnknownMode(mode.to_string()))
    }

    pub fn pair(&self, mode: ModeId) -> Result<[f64; 2]> {
        Ok([self.eta(0, mode)?, self.eta(1, mode)?])
    }

    /// Gate-mode parameter |dk| sqrt(hbar / (4 m w_str)).
    pub fn gate(&self) -> f64 {
        self.gate
    }
}

/// Per-ion, per-mode Lamb-Dicke parameters for wave vector `delta_k` (rad/m).
pub fn lamb_dicke(spectrum: &ModeSpectrum, delta_k: [f64; 3]) -> Result<LambDickeSet> {
    let norm = delta_k.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Invalid("wave vector must be non-zero and finite".into()));
    }
    let m = spectrum.ion_mass;
    let entries = spectrum
        .modes
        .iter()
        .map(|mode| {
            let x0 = (HBAR / (2.0 * m * mode.frequency)).sqrt();
            let k = delta_k[mode.axis.index()];
            (mode.id(), [k * mode.participation[0] * x0, k * mode.participation[1] * x0])
        })
        .collect();
    let w_str = spectrum.frequency(ModeId::GATE)?;
    let gate = norm * (HBAR / (4.0 * m * w_str)).sqrt();
    Ok(LambDickeSet { delta_k, entries, gate })
}

/// Per-ion, per-mode parameters for a single beam. Unlike [`lamb_dicke`] a zero vector is allowed.
pub fn beam_lamb_dicke(spectrum: &ModeSpectrum, k: [f64; 3]) -> Vec<(ModeId, [f64; 2])> {
    let m = spectrum.ion_mass;
    spectrum
        .modes
        .iter()
        .map(|mode| {
            let x0 = (HBAR / (2.0 * m * mode.frequency)).sqrt();
            let kk = k[mode.axis.index()];
            (mode.id(), [kk * mode.participation[0] * x0, kk * mode.participation[1] * x0])
        })
        .collect()
}

/// Geometry of the two gate beams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeamGeometry {
    /// Beams crossing at 90 degrees with the difference vector along the trap axis. The
    /// common transverse component lies in the y-z plane at `transverse_angle` from y.
    Perpendicular { transverse_angle: f64 },
    /// Beams counter-propagating along the trap axis.
    CounterPropagating,
    /// Explicit wave vectors in rad/m.
    Custom { k_a: [f64; 3], k_b: [f64; 3] },
}

impl BeamGeometry {
    /// Wave vectors of beams A and B for the given wavelength in m.
    pub fn wave_vectors(&self, wavelength: f64) -> ([f64; 3], [f64; 3]) {
        let k = 2.0 * PI / wavelength;
        match *self {
            BeamGeometry::Perpendicular { transverse_angle } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let (ty, tz) = (s * transverse_angle.cos(), s * transverse_angle.sin());
                ([k * s, k * ty, k * tz], [-k * s, k * ty, k * tz])
            }
            BeamGeometry::CounterPropagating => ([k, 0.0, 0.0], [-k, 0.0, 0.0]),
            BeamGeometry::Custom { k_a, k_b } => (k_a, k_b),
        }
    }
}

/// Ion spacing closest to `d` at which the optical phase difference `dk_x d` is a multiple of 2π.
pub fn commensurate_spacing(d: f64, dk_x: f64) -> f64 {
    if dk_x.abs() < 1e-300 {
        return d;
    }
    let period = 2.0 * PI / dk_x.abs();
    let n = (d / period).round().max(1.0);
    n * period
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spectrum() {
        let s = normal_modes(&TrapConfig::paper_defaults()).unwrap();
        assert_eq!(s.modes.len(), 6);
        let w_str = s.frequency(ModeId::GATE).unwrap();
        assert!((w_str / (2.0 * PI) - 2.009e6).abs() < 1e3);
        let w_com = s.frequency(ModeId::AXIAL_COM).unwrap();
        assert!((w_com - 2.0 * PI * 1.16e6).abs() < 1e-6);
        let y = s.mode(ModeId::new(Axis::Y, ModeKind::Stretch)).unwrap();
        let expect = ((2.0 * PI * 2.57e6f64).powi(2) - (2.0 * PI * 1.16e6f64).powi(2)).sqrt();
        assert!((y.frequency / expect - 1.0).abs() < 1e-12);
        let g = s.mode(ModeId::GATE).unwrap().participation;
        assert!(g[0] < 0.0 && g[1] > 0.0);
    }

    #[test]
    fn rejects_zigzag() {
        let mut t = TrapConfig::paper_defaults();
        t.radial_freq_y = t.axial_freq * 0.9;
        assert!(matches!(normal_modes(&t), Err(Error::Instability(_))));
    }

    #[test]
    fn mode_label_round_trip() {
        for m in ModeId::RADIAL.iter().chain([ModeId::GATE, ModeId::AXIAL_COM].iter()) {
            assert_eq!(m.to_string().parse::<ModeId>().unwrap(), *m);
        }
    }

    #[test]
    fn commensurate() {
        let d = 5.0e-6;
        let dk = 2.0e7;
        let dc = commensurate_spacing(d, dk);
        let r = (dc * dk / (2.0 * PI)).fract();
        assert!(r < 1e-9 || r > 1.0 - 1e-9);
        assert!((dc - d).abs() <= PI / dk + 1e-15);
    }
}

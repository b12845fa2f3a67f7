use super::{check_dimension, Basis, BeamPair, Level, LevelScheme, ModelKind, OperatorModel, Tier, Truncation};
use crate::crystal::{lamb_dicke, ModeId, ModeSpectrum};
use crate::error::{Error, Result};
use crate::linalg::{cis, C64};

/// Spin-dependent force on the gate mode, first order in the Lamb-Dicke parameter:
/// `H = Ω Σ_j η_j (1 + Z_j)(a e^{i(δt + φ_j)} + h.c.)`, with `η_j = ∓η` the signed gate-mode
/// parameters. Since `1 + Z = 2|↑⟩⟨↑|`, a single bright ion feels a force `η_eff Ω` with
/// `η_eff = 2η`, and one closed loop imprints `Φ = 2π(η_eff Ω/δ)²` on a singly bright state.
#[derive(Debug, Clone)]
pub struct SdfModel {
    eta: [f64; 2],
    omega: f64,
    detuning: f64,
    phases: [f64; 2],
}

/// Build the reduced model. The detuning is μ − ω_str, signed.
pub fn build_sdf(
    spectrum: &ModeSpectrum,
    beams: &BeamPair,
    scheme: &LevelScheme,
    truncation: &Truncation,
    max_dim: usize,
) -> Result<OperatorModel> {
    beams.validate()?;
    if !truncation.spectators.is_empty() {
        return Err(Error::config("truncation.spectators", "the reduced model keeps only the gate mode"));
    }
    let dk = beams.delta_k();
    let lde = lamb_dicke(spectrum, dk)?;
    let eta = lde.pair(ModeId::GATE)?;
    let g = beams.g();
    let omega = g * g / scheme.delta;
    let detuning = beams.mu - spectrum.frequency(ModeId::GATE)?;
    let x = spectrum.equilibrium_positions;
    let phases = [beams.beat_phase() + dk[0] * x[0], beams.beat_phase() + dk[0] * x[1]];
    let basis = Basis::new(vec![Level::Down, Level::Up], truncation.modes());
    check_dimension(&basis, max_dim)?;
    let model = SdfModel { eta, omega, detuning, phases };
    Ok(OperatorModel { tier: Tier::Sdf, basis, kind: ModelKind::Sdf(model), qubit_shift: 0.0 })
}

impl SdfModel {
    /// Gate-mode Lamb-Dicke parameter η.
    pub fn eta(&self) -> f64 {
        0.5 * (self.eta[0].abs() + self.eta[1].abs())
    }

    /// Per-ion force scale η_eff = 2η.
    pub fn eta_eff(&self) -> f64 {
        2.0 * self.eta()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub(crate) fn fastest_frequency(&self) -> f64 {
        self.detuning.abs()
    }

    pub(crate) fn apply(&self, basis: &Basis, t: f64, field: f64, psi: &[C64], out: &mut [C64]) {
        let p = basis.phonon_dim();
        let amp = self.omega * field * field;
        for a in 0..2 {
            for b in 0..2 {
                let bright = [a == 1, b == 1];
                // H = A a + conj(A) a†
                let mut coef = C64::new(0.0, 0.0);
                for j in 0..2 {
                    if bright[j] {
                        coef += cis(self.detuning * t + self.phases[j]) * (2.0 * amp * self.eta[j]);
                    }
                }
                let base = basis.pair_index(a, b) * p;
                for n in 0..p {
                    let mut acc = C64::new(0.0, 0.0);
                    if n + 1 < p {
                        acc += coef * ((n + 1) as f64).sqrt() * psi[base + n + 1];
                    }
                    if n > 0 {
                        acc += coef.conj() * (n as f64).sqrt() * psi[base + n - 1];
                    }
                    out[base + n] = acc;
                }
            }
        }
    }
}

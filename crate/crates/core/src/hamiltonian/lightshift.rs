use super::fock::{exp_i_quadrature, KronOp};
use super::{
    check_dimension, fill_phonon_phases, Basis, BeamPair, Level, LevelScheme, ModelKind, OperatorModel,
    Tier, Truncation, Workspace,
};
use crate::crystal::{lamb_dicke, ModeSpectrum};
use crate::error::{Error, Result};
use crate::linalg::{cis, C64};

/// Light shift after adiabatic elimination of the excited states, all Lamb-Dicke orders kept.
#[derive(Debug, Clone)]
pub struct LightShiftModel {
    prefactor: f64,
    mu: f64,
    beat_phase: f64,
    mode_freqs: Vec<f64>,
    /// `exp(i dk . (r_j - <r_j>))` and the c-number phase `exp(i dk . <r_j>)`.
    c_op: [KronOp; 2],
    c_adj: [KronOp; 2],
    c_phase: [C64; 2],
}

/// Light-shift amplitude 4g²Δ/(Δ² − μ²/4).
pub fn lightshift_prefactor(g: f64, delta: f64, mu: f64) -> Result<f64> {
    let den = delta * delta - 0.25 * mu * mu;
    if den.abs() < 1e-6 * delta * delta {
        return Err(Error::Invalid(format!(
            "detuning {delta:e} rad/s is resonant with half the beat frequency {:e} rad/s",
            0.5 * mu
        )));
    }
    Ok(4.0 * g * g * delta / den)
}

pub fn build_lightshift(
    spectrum: &ModeSpectrum,
    beams: &BeamPair,
    scheme: &LevelScheme,
    truncation: &Truncation,
    max_dim: usize,
    warn_ratio: f64,
) -> Result<OperatorModel> {
    beams.validate()?;
    let g = beams.g();
    if g / scheme.delta > warn_ratio {
        log::warn!(
            "g/Δ = {:.3} exceeds {warn_ratio}; adiabatic elimination is poorly justified",
            g / scheme.delta
        );
    }
    let prefactor = lightshift_prefactor(g, scheme.delta, beams.mu)?;
    let basis = Basis::new(vec![Level::Down, Level::Up], truncation.modes());
    check_dimension(&basis, max_dim)?;
    let dims = basis.mode_dims();
    let dk = beams.delta_k();
    let lde = lamb_dicke(spectrum, dk)?;
    let mut mode_freqs = Vec::new();
    for (id, _) in &basis.modes {
        mode_freqs.push(spectrum.frequency(*id)?);
    }
    let build = |j: usize| -> Result<KronOp> {
        let mut f = Vec::new();
        for (id, n) in &basis.modes {
            let e = lde.eta(j, *id)?;
            f.push(if e == 0.0 { None } else { Some(exp_i_quadrature(e, *n)) });
        }
        Ok(KronOp::from_factors(&dims, f))
    };
    let c_op = [build(0)?, build(1)?];
    let c_adj = [c_op[0].adjoint(), c_op[1].adjoint()];
    let x = spectrum.equilibrium_positions;
    let c_phase = [cis(dk[0] * x[0]), cis(dk[0] * x[1])];
    let model = LightShiftModel {
        prefactor,
        mu: beams.mu,
        beat_phase: beams.beat_phase(),
        mode_freqs,
        c_op,
        c_adj,
        c_phase,
    };
    Ok(OperatorModel { tier: Tier::LightShift, basis, kind: ModelKind::LightShift(model), qubit_shift: 0.0 })
}

impl LightShiftModel {
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub(crate) fn fastest_frequency(&self) -> f64 {
        self.mu + self.mode_freqs.iter().cloned().fold(0.0, f64::max)
    }

    pub(crate) fn apply(&self, basis: &Basis, t: f64, field: f64, psi: &[C64], out: &mut [C64], ws: &mut Workspace) {
        let p = basis.phonon_dim();
        let Workspace { x, y, phonon_phase, u, w, tmp } = ws;
        fill_phonon_phases(basis, &self.mode_freqs, t, phonon_phase);
        for (i, z) in psi.iter().enumerate() {
            x[i] = phonon_phase[i % p].conj() * z;
        }
        y.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let amp = self.prefactor * field * field;
        if amp != 0.0 {
            let beat = cis(self.mu * t + self.beat_phase);
            // sin(A) = (e^{iA} - e^{-iA}) / 2i
            for j in 0..2 {
                let fwd = beat * self.c_phase[j] * C64::new(0.0, -0.5 * amp);
                let bwd = (beat * self.c_phase[j]).conj() * C64::new(0.0, 0.5 * amp);
                for s in 0..2 {
                    let up = basis.pair_for(j, 1, s) * p;
                    self.c_op[j].apply(&x[up..up + p], u, tmp);
                    self.c_adj[j].apply(&x[up..up + p], w, tmp);
                    for k in 0..p {
                        y[up + k] += fwd * u[k] + bwd * w[k];
                    }
                }
            }
        }
        for (i, z) in y.iter().enumerate() {
            out[i] = phonon_phase[i % p] * z;
        }
    }
}

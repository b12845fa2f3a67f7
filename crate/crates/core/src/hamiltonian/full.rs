use super::fock::{exp_i_quadrature, KronOp};
use super::{
    check_dimension, fill_phonon_phases, Basis, BeamPair, BeamSelect, Level, LevelScheme, ModelKind,
    OperatorModel, Tier, Truncation, Workspace,
};
use crate::crystal::{beam_lamb_dicke, ModeSpectrum};
use crate::error::{Error, Result};
use crate::linalg::{cis, C64};

/// Ions with their optical excited states, driven by both gate beams, all Lamb-Dicke orders kept.
#[derive(Debug, Clone)]
pub struct FullModel {
    delta: f64,
    mu: f64,
    mode_freqs: Vec<f64>,
    level_energy: Vec<f64>,
    /// `exp(-i k_b . (r_j - <r_j>))` for beam b and ion j.
    disp: [[KronOp; 2]; 2],
    disp_adj: [[KronOp; 2]; 2],
    /// Excited level index and its coupling to up for beam b and ion j.
    couplings: Vec<(usize, [[C64; 2]; 2])>,
    enabled: [bool; 2],
    up: usize,
}

/// Build the full model on the register given by `truncation` and the level scheme.
pub fn build_full(
    spectrum: &ModeSpectrum,
    beams: &BeamPair,
    scheme: &LevelScheme,
    truncation: &Truncation,
    max_dim: usize,
) -> Result<OperatorModel> {
    beams.validate()?;
    if !(scheme.delta > 0.0) {
        return Err(Error::config("scheme", "detuning must be positive"));
    }
    if truncation.gate < 1 {
        return Err(Error::config("truncation.gate", "gate-mode cutoff must be at least 1"));
    }
    let levels = scheme.levels();
    let basis = Basis::new(levels.clone(), truncation.modes());
    check_dimension(&basis, max_dim)?;
    let dims = basis.mode_dims();
    let mut mode_freqs = Vec::new();
    for (id, _) in &basis.modes {
        mode_freqs.push(spectrum.frequency(*id)?);
    }
    let ks = [beams.k_a, beams.k_b];
    let x = spectrum.equilibrium_positions;
    let build_disp = |b: usize, j: usize| -> Result<KronOp> {
        let eta = beam_lamb_dicke(spectrum, ks[b]);
        let mut factors = Vec::new();
        for (id, n) in &basis.modes {
            let e = eta
                .iter()
                .find(|(m, _)| m == id)
                .map(|(_, e)| e[j])
                .ok_or_else(|| Error::UnknownMode(id.to_string()))?;
            factors.push(if e == 0.0 { None } else { Some(exp_i_quadrature(-e, *n)) });
        }
        Ok(KronOp::from_factors(&dims, factors))
    };
    let disp = [[build_disp(0, 0)?, build_disp(0, 1)?], [build_disp(1, 0)?, build_disp(1, 1)?]];
    let disp_adj = [
        [disp[0][0].adjoint(), disp[0][1].adjoint()],
        [disp[1][0].adjoint(), disp[1][1].adjoint()],
    ];
    let g = [beams.g_a, beams.g_b];
    let phi = [beams.phi_a, beams.phi_b];
    let coef = |b: usize, j: usize, mag: f64, arg: f64| -> C64 {
        cis(arg - phi[b] - ks[b][0] * x[j]) * mag
    };
    let mut couplings = Vec::new();
    for (lev, tau) in [(Level::EMinus, 0usize), (Level::EPlus, 1usize)] {
        let idx = basis.level_index(lev).expect("excited level");
        let mut c = [[C64::new(0.0, 0.0); 2]; 2];
        for b in 0..2 {
            for j in 0..2 {
                c[b][j] = coef(b, j, g[b], beams.coupling_phases[2 * b + tau]);
            }
        }
        couplings.push((idx, c));
    }
    if let Some(idx) = basis.level_index(Level::EZero) {
        let mut c = [[C64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            c[0][j] = coef(0, j, 0.5 * beams.e0_leak_rabi, 0.0);
        }
        couplings.push((idx, c));
    } else if beams.e0_leak_rabi != 0.0 {
        return Err(Error::config("scheme.include_e0", "an e0 coupling needs the e0 level in the register"));
    }
    let level_energy = levels
        .iter()
        .map(|l| match l {
            Level::EPlus => scheme.delta,
            Level::EMinus => -scheme.delta,
            _ => 0.0,
        })
        .collect();
    let up = basis.level_index(Level::Up).expect("up level");
    let model = FullModel {
        delta: scheme.delta,
        mu: beams.mu,
        mode_freqs,
        level_energy,
        disp,
        disp_adj,
        couplings,
        enabled: [true, true],
        up,
    };
    Ok(OperatorModel { tier: Tier::Full, basis, kind: ModelKind::Full(model), qubit_shift: 0.0 })
}

impl FullModel {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub(crate) fn fastest_frequency(&self) -> f64 {
        self.delta + 0.5 * self.mu
    }

    pub(crate) fn with_beams(&self, select: BeamSelect) -> FullModel {
        FullModel { enabled: select.enabled(), ..self.clone() }
    }

    pub(crate) fn apply(&self, basis: &Basis, t: f64, field: f64, psi: &[C64], out: &mut [C64], ws: &mut Workspace) {
        let l = basis.level_count();
        let p = basis.phonon_dim();
        let Workspace { x, y, phonon_phase, u, w, tmp } = ws;
        fill_phonon_phases(basis, &self.mode_freqs, t, phonon_phase);
        for a in 0..l {
            for b in 0..l {
                let ion = cis((self.level_energy[a] + self.level_energy[b]) * t);
                let base = basis.pair_index(a, b) * p;
                for k in 0..p {
                    x[base + k] = (ion * phonon_phase[k]).conj() * psi[base + k];
                }
            }
        }
        y.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let drive = [cis(-0.5 * self.mu * t) * field, cis(0.5 * self.mu * t) * field];
        for j in 0..2 {
            for s in 0..l {
                let up = basis.pair_for(j, self.up, s) * p;
                for b in 0..2 {
                    if !self.enabled[b] || field == 0.0 {
                        continue;
                    }
                    self.disp[b][j].apply(&x[up..up + p], u, tmp);
                    w.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                    let mut any = false;
                    for (lev, c) in &self.couplings {
                        let c = c[b][j] * drive[b];
                        if c.re == 0.0 && c.im == 0.0 {
                            continue;
                        }
                        any = true;
                        let e = basis.pair_for(j, *lev, s) * p;
                        let cc = c.conj();
                        for k in 0..p {
                            y[e + k] += c * u[k];
                            w[k] += cc * x[e + k];
                        }
                    }
                    if any {
                        self.disp_adj[b][j].apply(w, u, tmp);
                        for k in 0..p {
                            y[up + k] += u[k];
                        }
                    }
                }
            }
        }
        for a in 0..l {
            for b in 0..l {
                let ion = cis((self.level_energy[a] + self.level_energy[b]) * t);
                let base = basis.pair_index(a, b) * p;
                for k in 0..p {
                    out[base + k] = ion * phonon_phase[k] * y[base + k];
                }
            }
        }
    }
}

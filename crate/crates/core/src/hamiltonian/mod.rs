//! Time-dependent Hamiltonians for the gate at three levels of approximation.
//!
//! The state register is ordered ion 1 ⊗ ion 2 ⊗ gate mode ⊗ spectator modes, row-major, with
//! the internal levels of each ion listed in [`Basis::levels`] and each mode truncated at its
//! cutoff. All models act in the interaction picture of their diagonal part: the full model
//! removes the excited-state detunings and the phonon energies, the light-shift model removes
//! the phonon energies, and the spin-dependent-force model is already written in that frame.

pub mod fock;
mod full;
mod lightshift;
mod sdf;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::crystal::ModeId;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::units::D_ZEEMAN_HZ_PER_GAUSS;

pub use full::{build_full, FullModel};
pub use lightshift::{build_lightshift, lightshift_prefactor, LightShiftModel};
pub use sdf::{build_sdf, SdfModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Full,
    #[serde(rename = "lightshift")]
    LightShift,
    Sdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Down,
    Up,
    EMinus,
    EPlus,
    EZero,
}

impl Level {
    pub fn is_qubit(self) -> bool {
        matches!(self, Level::Down | Level::Up)
    }

    /// Eigenvalue of Z on the qubit levels, zero elsewhere.
    pub fn z(self) -> f64 {
        match self {
            Level::Down => -1.0,
            Level::Up => 1.0,
            _ => 0.0,
        }
    }
}

/// Which gate beams are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamSelect {
    A,
    B,
    #[default]
    Both,
}

impl BeamSelect {
    pub fn enabled(self) -> [bool; 2] {
        match self {
            BeamSelect::A => [true, false],
            BeamSelect::B => [false, true],
            BeamSelect::Both => [true, true],
        }
    }
}

/// The two gate lasers. Rates are angular (rad/s), wave vectors in rad/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamPair {
    pub g_a: f64,
    pub g_b: f64,
    /// Arguments of g for (A, e-), (A, e+), (B, e-), (B, e+).
    pub coupling_phases: [f64; 4],
    pub mu: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub k_a: [f64; 3],
    pub k_b: [f64; 3],
    /// Rabi frequency of beam A on up -> e0 through imperfect polarization; the matrix element
    /// is half of it.
    pub e0_leak_rabi: f64,
    pub symmetric: bool,
}

impl BeamPair {
    pub const DEFAULT_PHASES: [f64; 4] = [0.0, 0.0, -PI / 2.0, PI / 2.0];

    pub fn new(g: f64, mu: f64, k_a: [f64; 3], k_b: [f64; 3]) -> Self {
        BeamPair {
            g_a: g,
            g_b: g,
            coupling_phases: Self::DEFAULT_PHASES,
            mu,
            phi_a: 0.0,
            phi_b: 0.0,
            k_a,
            k_b,
            e0_leak_rabi: 0.0,
            symmetric: true,
        }
    }

    /// Beat phase φ_A − φ_B.
    pub fn beat_phase(&self) -> f64 {
        self.phi_a - self.phi_b
    }

    pub fn delta_k(&self) -> [f64; 3] {
        [self.k_a[0] - self.k_b[0], self.k_a[1] - self.k_b[1], self.k_a[2] - self.k_b[2]]
    }

    /// Common coupling magnitude; the mean of the two beams when they differ.
    pub fn g(&self) -> f64 {
        0.5 * (self.g_a + self.g_b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.symmetric && (self.g_a - self.g_b).abs() > 1e-12 * self.g_a.abs().max(self.g_b.abs()) {
            return Err(Error::config("beams", "symmetric drive requires equal couplings"));
        }
        if !(self.g_a >= 0.0 && self.g_b >= 0.0 && self.e0_leak_rabi >= 0.0) {
            return Err(Error::config("beams", "couplings must be non-negative"));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::config("beams", "beat frequency must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    /// Single-photon detuning Δ of e± in rad/s.
    pub delta: f64,
    pub include_e0: bool,
}

impl LevelScheme {
    /// Detuning set by the Zeeman splitting at field `gauss`.
    pub fn from_field(gauss: f64) -> Self {
        LevelScheme { delta: 2.0 * PI * D_ZEEMAN_HZ_PER_GAUSS * gauss, include_e0: false }
    }

    pub fn levels(&self) -> Vec<Level> {
        let mut v = vec![Level::Down, Level::Up, Level::EMinus, Level::EPlus];
        if self.include_e0 {
            v.push(Level::EZero);
        }
        v
    }
}

/// Fock cutoffs (largest retained occupation) for the gate mode and spectators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub gate: usize,
    pub spectators: Vec<(ModeId, usize)>,
}

impl Truncation {
    pub fn gate_only(gate: usize) -> Self {
        Truncation { gate, spectators: Vec::new() }
    }

    /// Gate mode plus every other mode of the two-ion crystal at the same cutoff.
    pub fn all_spectators(gate: usize, spectator: usize) -> Self {
        let mut spectators = vec![(ModeId::AXIAL_COM, spectator)];
        spectators.extend(ModeId::RADIAL.iter().map(|m| (*m, spectator)));
        Truncation { gate, spectators }
    }

    pub fn with_spectator(gate: usize, mode: ModeId, cutoff: usize) -> Self {
        Truncation { gate, spectators: vec![(mode, cutoff)] }
    }

    fn modes(&self) -> Vec<(ModeId, usize)> {
        let mut v = vec![(ModeId::GATE, self.gate)];
        v.extend(self.spectators.iter().copied());
        v
    }
}

/// Register layout shared by states and operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub levels: Vec<Level>,
    pub modes: Vec<(ModeId, usize)>,
}

impl Basis {
    pub fn new(levels: Vec<Level>, modes: Vec<(ModeId, usize)>) -> Self {
        Basis { levels, modes }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn mode_dims(&self) -> Vec<usize> {
        self.modes.iter().map(|(_, n)| n + 1).collect()
    }

    pub fn phonon_dim(&self) -> usize {
        self.modes.iter().map(|(_, n)| n + 1).product()
    }

    pub fn dim(&self) -> usize {
        self.level_count().pow(2) * self.phonon_dim()
    }

    pub fn pair_index(&self, l1: usize, l2: usize) -> usize {
        l1 * self.level_count() + l2
    }

    /// Pair index with ion `ion` in level `own` and the other ion in `other`.
    pub fn pair_for(&self, ion: usize, own: usize, other: usize) -> usize {
        if ion == 0 {
            self.pair_index(own, other)
        } else {
            self.pair_index(other, own)
        }
    }

    pub fn index(&self, l1: usize, l2: usize, phonon: usize) -> usize {
        self.pair_index(l1, l2) * self.phonon_dim() + phonon
    }

    pub fn level_index(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|l| *l == level)
    }

    pub fn mode_position(&self, mode: ModeId) -> Option<usize> {
        self.modes.iter().position(|(m, _)| *m == mode)
    }

    pub fn phonon_index(&self, occupations: &[usize]) -> usize {
        let mut idx = 0;
        for ((_, n), &o) in self.modes.iter().zip(occupations) {
            idx = idx * (n + 1) + o;
        }
        idx
    }

    pub fn occupations(&self, mut phonon: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes.len()];
        for (k, (_, n)) in self.modes.iter().enumerate().rev() {
            occ[k] = phonon % (n + 1);
            phonon /= n + 1;
        }
        occ
    }

    /// Pair indices of dd, du, ud, uu.
    pub fn qubit_pairs(&self) -> [usize; 4] {
        let d = self.level_index(Level::Down).expect("down level");
        let u = self.level_index(Level::Up).expect("up level");
        [self.pair_index(d, d), self.pair_index(d, u), self.pair_index(u, d), self.pair_index(u, u)]
    }

    /// Same register with the two ions exchanged: the map from old to new indices.
    pub fn swap_ions_permutation(&self) -> Vec<usize> {
        let l = self.level_count();
        let p = self.phonon_dim();
        let mut perm = vec![0; self.dim()];
        for a in 0..l {
            for b in 0..l {
                for k in 0..p {
                    perm[self.index(a, b, k)] = self.index(b, a, k);
                }
            }
        }
        perm
    }
}

/// Scratch buffers for operator application.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub(crate) x: Vec<C64>,
    pub(crate) y: Vec<C64>,
    pub(crate) phonon_phase: Vec<C64>,
    pub(crate) u: Vec<C64>,
    pub(crate) w: Vec<C64>,
    pub(crate) tmp: Vec<C64>,
}

impl Workspace {
    pub fn new(basis: &Basis) -> Self {
        let z = C64::new(0.0, 0.0);
        let p = basis.phonon_dim();
        Workspace {
            x: vec![z; basis.dim()],
            y: vec![z; basis.dim()],
            phonon_phase: vec![z; p],
            u: vec![z; p],
            w: vec![z; p],
            tmp: vec![z; p],
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum ModelKind {
    Full(FullModel),
    LightShift(LightShiftModel),
    Sdf(SdfModel),
}

/// A Hamiltonian tier bound to a register layout. Immutable once built.
#[derive(Debug, Clone)]
pub struct OperatorModel {
    pub tier: Tier,
    pub basis: Basis,
    pub(crate) kind: ModelKind,
    /// Static qubit-frequency offset (rad/s) entering as (shift/2)(Z1 + Z2).
    pub qubit_shift: f64,
}

impl OperatorModel {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Same model with a static qubit-frequency offset.
    pub fn with_qubit_shift(&self, shift: f64) -> Self {
        OperatorModel { qubit_shift: shift, ..self.clone() }
    }

    /// Fastest frequency the propagator must resolve, in rad/s.
    pub fn fastest_frequency(&self) -> f64 {
        match &self.kind {
            ModelKind::Full(m) => m.fastest_frequency(),
            ModelKind::LightShift(m) => m.fastest_frequency(),
            ModelKind::Sdf(m) => m.fastest_frequency(),
        }
    }

    /// Samples per period of the fastest frequency that the step size must respect, if any.
    pub fn samples_per_period(&self) -> Option<f64> {
        match self.tier {
            Tier::Full => Some(20.0),
            _ => None,
        }
    }

    /// `out = H(t) psi` in the model's interaction picture, with the laser field scaled by `field`.
    pub fn apply(&self, t: f64, field: f64, psi: &[C64], out: &mut [C64], ws: &mut Workspace) {
        match &self.kind {
            ModelKind::Full(m) => m.apply(&self.basis, t, field, psi, out, ws),
            ModelKind::LightShift(m) => m.apply(&self.basis, t, field, psi, out, ws),
            ModelKind::Sdf(m) => m.apply(&self.basis, t, field, psi, out),
        }
        if self.qubit_shift != 0.0 {
            let l = self.basis.level_count();
            let p = self.basis.phonon_dim();
            for a in 0..l {
                for b in 0..l {
                    let z = 0.5 * self.qubit_shift * (self.basis.levels[a].z() + self.basis.levels[b].z());
                    if z == 0.0 {
                        continue;
                    }
                    let base = self.basis.pair_index(a, b) * p;
                    for k in base..base + p {
                        out[k] += psi[k] * z;
                    }
                }
            }
        }
    }

    /// `dpsi = -i H(t) psi`.
    pub fn rhs(&self, t: f64, field: f64, psi: &[C64], dpsi: &mut [C64], ws: &mut Workspace) {
        self.apply(t, field, psi, dpsi, ws);
        for z in dpsi.iter_mut() {
            *z = C64::new(z.im, -z.re);
        }
    }

    /// Dense matrix of H(t); intended for tests on small registers.
    pub fn matrix(&self, t: f64, field: f64) -> CMat {
        let n = self.dim();
        let mut ws = Workspace::new(&self.basis);
        let mut m = CMat::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for c in 0..n {
            e[c] = C64::new(1.0, 0.0);
            self.apply(t, field, &e, &mut col, &mut ws);
            for r in 0..n {
                m[(r, c)] = col[r];
            }
            e[c] = C64::new(0.0, 0.0);
        }
        m
    }

    pub fn as_full(&self) -> Option<&FullModel> {
        match &self.kind {
            ModelKind::Full(m) => Some(m),
            _ => None,
        }
    }

    /// Full model with only the selected beams switched on.
    pub fn with_beams(&self, select: BeamSelect) -> Result<Self> {
        match &self.kind {
            ModelKind::Full(m) => Ok(OperatorModel {
                kind: ModelKind::Full(m.with_beams(select)),
                ..self.clone()
            }),
            _ => Err(Error::Invalid("beam selection requires the full model".into())),
        }
    }
}

/// Register dimension for a level count per ion and truncation.
pub fn register_dimension(levels_per_ion: usize, truncation: &Truncation) -> usize {
    levels_per_ion.pow(2) * truncation.modes().iter().map(|(_, n)| n + 1).product::<usize>()
}

pub(crate) fn check_dimension(basis: &Basis, limit: usize) -> Result<()> {
    let dim = basis.dim();
    if dim > limit {
        return Err(Error::DimensionTooLarge { dim, limit });
    }
    Ok(())
}

/// Phase factors `exp(i sum_k w_k n_k t)` for every phonon basis state.
pub(crate) fn fill_phonon_phases(basis: &Basis, freqs: &[f64], t: f64, out: &mut [C64]) {
    out[0] = C64::new(1.0, 0.0);
    let mut len = 1;
    for ((_, n), w) in basis.modes.iter().zip(freqs) {
        let d = n + 1;
        let step = crate::linalg::cis(w * t);
        // expand in place from the back so earlier entries stay valid
        for i in (0..len).rev() {
            let base = out[i];
            let mut f = C64::new(1.0, 0.0);
            for o in 0..d {
                out[i * d + o] = base * f;
                f *= step;
            }
        }
        len *= d;
    }
    debug_assert_eq!(len, out.len());
}

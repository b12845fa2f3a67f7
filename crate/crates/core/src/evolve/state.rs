use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Basis, Level};
use crate::linalg::C64;

/// Amplitudes over a [`Basis`] register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    pub basis: Basis,
    pub amplitudes: Vec<C64>,
}

impl QuantumState {
    pub fn zeros(basis: &Basis) -> Self {
        QuantumState { basis: basis.clone(), amplitudes: vec![C64::new(0.0, 0.0); basis.dim()] }
    }

    /// Product state with the given internal levels and Fock occupations.
    pub fn product(basis: &Basis, l1: Level, l2: Level, occupations: &[usize]) -> Result<Self> {
        let a = basis
            .level_index(l1)
            .ok_or_else(|| Error::Invalid(format!("level {l1:?} not in the register")))?;
        let b = basis
            .level_index(l2)
            .ok_or_else(|| Error::Invalid(format!("level {l2:?} not in the register")))?;
        if occupations.len() != basis.modes.len()
            || occupations.iter().zip(&basis.modes).any(|(o, (_, n))| o > n)
        {
            return Err(Error::Invalid("occupations do not fit the register".into()));
        }
        let mut s = Self::zeros(basis);
        s.amplitudes[basis.index(a, b, basis.phonon_index(occupations))] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Qubit basis state `k` in {dd, du, ud, uu} with every mode in Fock state `n_gate` for the
    /// gate mode and vacuum elsewhere.
    pub fn qubit_basis(basis: &Basis, k: usize, n_gate: usize) -> Result<Self> {
        let lv = [Level::Down, Level::Up];
        let mut occ = vec![0; basis.modes.len()];
        if !occ.is_empty() {
            occ[0] = n_gate;
        }
        Self::product(basis, lv[k >> 1], lv[k & 1], &occ)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Total population outside the two qubit levels of either ion.
    pub fn excited_population(&self) -> f64 {
        excited_population(&self.basis, &self.amplitudes)
    }

    /// Population with at least one quantum in `mode_pos` (position in the mode list).
    pub fn mode_excitation(&self, mode_pos: usize) -> f64 {
        mode_excitation(&self.basis, &self.amplitudes, mode_pos)
    }
}

pub fn excited_population(basis: &Basis, psi: &[C64]) -> f64 {
    let l = basis.level_count();
    let p = basis.phonon_dim();
    let mut s = 0.0;
    for a in 0..l {
        for b in 0..l {
            if basis.levels[a].is_qubit() && basis.levels[b].is_qubit() {
                continue;
            }
            let base = basis.pair_index(a, b) * p;
            s += psi[base..base + p].iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    s
}

pub fn mode_excitation(basis: &Basis, psi: &[C64], mode_pos: usize) -> f64 {
    let dims = basis.mode_dims();
    let p = basis.phonon_dim();
    let inner: usize = dims[mode_pos + 1..].iter().product();
    let d = dims[mode_pos];
    psi.iter()
        .enumerate()
        .filter(|(i, _)| (i % p / inner) % d > 0)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

//! Random Clifford sequences and their simulated survival.
//!
//! Seeds are split from the master seed as follows: the sequence at length index `i` and
//! position `j` takes the first output of ChaCha20 seeded with the master seed on stream
//! `i << 32 | j`. That sequence seed drives element selection on stream 0 and shot sampling on
//! stream 1.

use nalgebra::{Matrix3, Matrix4};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compile::{catalog, ls_gate, NativeOp};
use super::group::{clifford_group, GROUP_ORDER};
use crate::error::{Error, Result};
use crate::evolve::process::symmetric_isometry;
use crate::evolve::GateResult;
use crate::linalg::C64;
use crate::pulse::GateSchedule;

/// `length` random group indices followed by the element that inverts their product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordSequence {
    pub length: usize,
    pub seed: u64,
    pub elements: Vec<usize>,
}

pub fn generate_sequence(length: usize, seed: u64) -> CliffordSequence {
    let group = clifford_group();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut elements: Vec<usize> = (0..length).map(|_| rng.random_range(0..GROUP_ORDER)).collect();
    let net = elements.iter().fold(0, |acc, &e| group.multiply(e, acc));
    elements.push(group.inverse(net));
    CliffordSequence { length, seed, elements }
}

/// Seed of sequence `j` at length index `i`.
pub fn sequence_seed(master: u64, i: usize, j: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(((i as u64) << 32) | j as u64);
    rng.next_u64()
}

/// How an LS gate acts on the symmetric subspace.
#[derive(Debug, Clone, PartialEq)]
pub enum LsChannel {
    Ideal,
    /// The ideal gate followed by depolarizing noise of average error `error`.
    Depolarizing { error: f64 },
    /// Kraus operators on the symmetric subspace. They may be trace decreasing, which models
    /// leakage out of the subspace.
    Process { kraus: Vec<Matrix3<C64>> },
}

impl LsChannel {
    /// Channel from Kraus operators on the qubit pair (4x4, compressed to the subspace) or on
    /// the subspace itself (3x3).
    pub fn from_kraus(kraus: &[nalgebra::DMatrix<C64>]) -> Result<Self> {
        let s = symmetric_isometry();
        let mut out = Vec::with_capacity(kraus.len());
        for k in kraus {
            match k.shape() {
                (3, 3) => out.push(Matrix3::from_fn(|i, j| k[(i, j)])),
                (4, 4) => out.push(s.adjoint() * Matrix4::from_fn(|i, j| k[(i, j)]) * s),
                (r, c) => {
                    return Err(Error::Invalid(format!(
                        "Kraus operator of shape {r}x{c} does not act on the symmetric subspace"
                    )))
                }
            }
        }
        Ok(LsChannel::Process { kraus: out })
    }

    /// Channel of a simulated gate, with its echo pulses and geometric phase divided out.
    pub fn from_gate(result: &GateResult, schedule: &GateSchedule, target_phase: f64) -> Self {
        let ideal = schedule.ideal_unitary(target_phase);
        let s = symmetric_isometry();
        let g = ls_gate();
        let kraus = result.kraus.iter().map(|k| g * (s.adjoint() * (ideal.adjoint() * k) * s)).collect();
        LsChannel::Process { kraus }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LsChannel::Depolarizing { error } => check_error("ls error", *error),
            LsChannel::Process { kraus } if kraus.is_empty() => Err(Error::Invalid("empty LS process".into())),
            _ => Ok(()),
        }
    }
}

/// Noise model for simulated benchmarking.
#[derive(Debug, Clone, PartialEq)]
pub enum SrbNoise {
    Ideal,
    /// Each Clifford, including the inverting one, is ideal followed by depolarizing noise of
    /// average error `error` on the subspace.
    Clifford { error: f64 },
    /// Each Clifford runs as its compiled native sequence; every microwave rotation carries
    /// depolarizing noise of average error `single_qubit_error`.
    Native { ls: LsChannel, single_qubit_error: f64 },
}

impl SrbNoise {
    pub fn describe(&self) -> String {
        match self {
            SrbNoise::Ideal => "ideal".into(),
            SrbNoise::Clifford { error } => format!("clifford depolarizing, error {error:e}"),
            SrbNoise::Native { ls, single_qubit_error } => {
                let l = match ls {
                    LsChannel::Ideal => "ideal".to_string(),
                    LsChannel::Depolarizing { error } => format!("depolarizing {error:e}"),
                    LsChannel::Process { kraus } => format!("process with {} Kraus operators", kraus.len()),
                };
                format!("native gates, LS {l}, single-qubit error {single_qubit_error:e}")
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SrbNoise::Ideal => Ok(()),
            SrbNoise::Clifford { error } => check_error("clifford error", *error),
            SrbNoise::Native { ls, single_qubit_error } => {
                check_error("single-qubit error", *single_qubit_error)?;
                ls.validate()
            }
        }
    }
}

fn check_error(what: &str, e: f64) -> Result<()> {
    // Depolarizing strength 1.5 e must stay a probability.
    if !(0.0..=2.0 / 3.0).contains(&e) {
        return Err(Error::Invalid(format!("{what} {e} outside [0, 2/3]")));
    }
    Ok(())
}

/// Survival of |dd> after running `seq` under `noise`.
pub fn survival(seq: &CliffordSequence, noise: &SrbNoise) -> f64 {
    let group = clifford_group();
    let mut rho = Matrix3::<C64>::zeros();
    rho[(0, 0)] = C64::from(1.0);
    match noise {
        SrbNoise::Ideal => {
            for &e in &seq.elements {
                rho = conjugate(&group.get(e).matrix, &rho);
            }
        }
        SrbNoise::Clifford { error } => {
            for &e in &seq.elements {
                rho = depolarize(&conjugate(&group.get(e).matrix, &rho), 1.5 * error);
            }
        }
        SrbNoise::Native { ls, single_qubit_error } => {
            let cat = catalog();
            for &e in &seq.elements {
                for op in &cat.entries[e].ops {
                    rho = match op {
                        NativeOp::Rotation { .. } => depolarize(&conjugate(&op.matrix(), &rho), 1.5 * single_qubit_error),
                        NativeOp::Ls => apply_ls(ls, &rho),
                    };
                }
            }
        }
    }
    rho[(0, 0)].re.clamp(0.0, 1.0)
}

fn conjugate(u: &Matrix3<C64>, rho: &Matrix3<C64>) -> Matrix3<C64> {
    u * rho * u.adjoint()
}

pub(crate) fn depolarize(rho: &Matrix3<C64>, lambda: f64) -> Matrix3<C64> {
    let tr = rho.trace();
    rho * C64::from(1.0 - lambda) + Matrix3::identity() * (tr * (lambda / 3.0))
}

fn apply_ls(ls: &LsChannel, rho: &Matrix3<C64>) -> Matrix3<C64> {
    match ls {
        LsChannel::Ideal => conjugate(&ls_gate(), rho),
        LsChannel::Depolarizing { error } => depolarize(&conjugate(&ls_gate(), rho), 1.5 * error),
        LsChannel::Process { kraus } => kraus.iter().map(|k| conjugate(k, rho)).sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrbSettings {
    pub lengths: Vec<usize>,
    pub sequences: usize,
    /// Shots per sequence; zero records exact survival probabilities.
    pub shots: u64,
    pub seed: u64,
}

impl Default for SrbSettings {
    fn default() -> Self {
        SrbSettings { lengths: vec![1, 3, 7], sequences: 33, shots: 0, seed: 0 }
    }
}

impl SrbSettings {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(Error::config("srb.lengths", "need at least one length, all >= 1"));
        }
        if self.sequences == 0 {
            return Err(Error::config("srb.sequences", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrbRecord {
    pub length: usize,
    pub seed: u64,
    pub shots: u64,
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrbDataset {
    pub records: Vec<SrbRecord>,
    pub lengths: Vec<usize>,
    pub metadata: String,
}

impl SrbDataset {
    pub fn from_records(records: Vec<SrbRecord>, metadata: impl Into<String>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| !(0.0..=1.0).contains(&r.survival)) {
            return Err(Error::Invalid(format!("survival {} outside [0, 1]", r.survival)));
        }
        let mut lengths: Vec<usize> = records.iter().map(|r| r.length).collect();
        lengths.sort_unstable();
        lengths.dedup();
        Ok(SrbDataset { records, lengths, metadata: metadata.into() })
    }

    /// Mean survival per length, in length order.
    pub fn means(&self) -> Vec<(usize, f64)> {
        self.lengths
            .iter()
            .map(|&l| {
                let v: Vec<f64> = self.records.iter().filter(|r| r.length == l).map(|r| r.survival).collect();
                (l, v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect()
    }
}

/// Simulated benchmarking dataset.
pub fn run_srb(noise: &SrbNoise, settings: &SrbSettings) -> Result<SrbDataset> {
    settings.validate()?;
    noise.validate()?;
    if matches!(noise, SrbNoise::Native { .. }) {
        catalog();
    }
    let jobs: Vec<(usize, usize, usize)> = settings
        .lengths
        .iter()
        .enumerate()
        .flat_map(|(i, &l)| (0..settings.sequences).map(move |j| (i, j, l)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(i, j, length)| {
            let seed = sequence_seed(settings.seed, i, j);
            let seq = generate_sequence(length, seed);
            let exact = survival(&seq, noise);
            let survival = if settings.shots == 0 {
                exact
            } else {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(1);
                let b = Binomial::new(settings.shots, exact).map_err(|e| Error::Invalid(e.to_string()))?;
                b.sample(&mut rng) as f64 / settings.shots as f64
            };
            Ok(SrbRecord { length, seed, shots: settings.shots, survival })
        })
        .collect::<Result<Vec<_>>>()?;
    let metadata = format!("{}; {} sequences per length, {} shots", noise.describe(), settings.sequences, settings.shots);
    SrbDataset::from_records(records, metadata)
}

//! Gap benchmarking: the benchmarking sequences with every LS gate removed and a
//! microwave-only inverting rotation, under single-qubit depolarizing noise.

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compile::{catalog, compose, fit_word, CompileOptions, NativeOp};
use super::group::clifford_group;
use super::sequence::{generate_sequence, sequence_seed};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub length: usize,
    pub survival: f64,
    /// Mean number of microwave rotations per sequence.
    pub rotations: f64,
}

/// Microwave rotation counts of the gap sequences at each length.
pub fn gap_pulse_counts(lengths: &[usize], sequences: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let group = clifford_group();
    let cat = catalog();
    let opts = CompileOptions::default();
    lengths
        .iter()
        .enumerate()
        .map(|(i, &length)| {
            (0..sequences)
                .into_par_iter()
                .map(|j| {
                    let s = sequence_seed(seed, i, j);
                    let seq = generate_sequence(length, s);
                    let rot: Vec<NativeOp> = seq.elements[..length]
                        .iter()
                        .flat_map(|&e| cat.entries[e].ops.iter().copied())
                        .filter(|o| !matches!(o, NativeOp::Ls))
                        .collect();
                    let u: Matrix3<_> = compose(&rot);
                    let mut rng = ChaCha20Rng::seed_from_u64(s);
                    let inv = if group.find(&u) == Some(0) {
                        Vec::new()
                    } else {
                        fit_word(&u.adjoint(), 0, &opts, &mut rng)
                            .ok_or_else(|| Error::Compile("no microwave inverse found".into()))?
                    };
                    Ok(rot.len() + inv.len())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Survival of a sequence of `n` rotations each with average error `eps`.
fn depolarized(n: usize, eps: f64) -> f64 {
    1.0 / 3.0 + 2.0 / 3.0 * (1.0 - 1.5 * eps).powi(n as i32)
}

/// Expected gap-benchmarking survival at each length.
pub fn gap_benchmark(single_qubit_error: f64, lengths: &[usize], sequences: usize, seed: u64) -> Result<Vec<GapPoint>> {
    if !(0.0..=2.0 / 3.0).contains(&single_qubit_error) {
        return Err(Error::Invalid(format!("single-qubit error {single_qubit_error} outside [0, 2/3]")));
    }
    let counts = gap_pulse_counts(lengths, sequences, seed)?;
    Ok(lengths
        .iter()
        .zip(&counts)
        .map(|(&length, c)| {
            let n = c.len() as f64;
            GapPoint {
                length,
                survival: c.iter().map(|&k| depolarized(k, single_qubit_error)).sum::<f64>() / n,
                rotations: c.iter().sum::<usize>() as f64 / n,
            }
        })
        .collect())
}

/// Single-qubit error that reproduces `survival` at `length`.
pub fn calibrate_gap(survival: f64, length: usize, sequences: usize, seed: u64) -> Result<f64> {
    if !(1.0 / 3.0 < survival && survival <= 1.0) {
        return Err(Error::Invalid(format!("gap survival {survival} outside (1/3, 1]")));
    }
    let counts = gap_pulse_counts(&[length], sequences, seed)?.remove(0);
    let mean = |eps: f64| counts.iter().map(|&k| depolarized(k, eps)).sum::<f64>() / counts.len() as f64;
    let (mut lo, mut hi) = (0.0, 2.0 / 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) > survival {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

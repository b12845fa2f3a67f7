//! Decay fit and LS-gate fidelity extraction.
//!
//! Survival is fitted to `B + A p^L` with `B` pinned to 1/3 unless the free asymptote is
//! requested. The Clifford average fidelity follows from the depolarizing relation
//! `F = p + (1 - p)/d` with d = 3.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::compile::catalog;
use super::lm::{minimize, LmOptions};
use super::sequence::SrbDataset;
use crate::error::{Error, Result};

pub const ASYMPTOTE: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Fit the asymptote instead of pinning it to 1/3.
    pub free_asymptote: bool,
    /// Error per microwave rotation used when attributing the Clifford error.
    pub single_qubit_error: f64,
    /// Mean LS gates and rotations per Clifford; the compiled catalog is used when absent.
    pub counts: Option<[f64; 2]>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { free_asymptote: false, single_qubit_error: 9e-5, counts: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrbFit {
    pub p: f64,
    pub amplitude: f64,
    pub asymptote: f64,
    pub asymptote_fixed: bool,
    pub clifford_fidelity: f64,
    pub ls_fidelity: f64,
    pub sigma_p: f64,
    pub sigma_amplitude: f64,
    pub sigma_asymptote: f64,
    pub sigma_clifford_fidelity: f64,
    pub sigma_ls_fidelity: f64,
    pub n_ls: f64,
    pub n_1q: f64,
    pub single_qubit_error: f64,
    /// Mean survival minus model, per length.
    pub residuals: Vec<f64>,
}

struct Point {
    length: f64,
    mean: f64,
    var: f64,
}

fn points(data: &SrbDataset) -> Vec<Point> {
    data.lengths
        .iter()
        .map(|&l| {
            let v: Vec<f64> = data.records.iter().filter(|r| r.length == l).map(|r| r.survival).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sample = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            Point { length: l as f64, mean, var: (sample / n).max(1e-14) }
        })
        .collect()
}

pub fn fit_srb(data: &SrbDataset, opts: &FitOptions) -> Result<SrbFit> {
    if data.lengths.len() < 2 {
        return Err(Error::Fit(format!("need at least two distinct lengths, got {:?}", data.lengths)));
    }
    if opts.free_asymptote && data.lengths.len() < 3 {
        return Err(Error::Fit("a free asymptote needs at least three lengths".into()));
    }
    let pts = points(data);
    let w: Vec<f64> = pts.iter().map(|p| 1.0 / p.var.sqrt()).collect();

    // Start from a log-linear fit above the pinned asymptote.
    let logs: Vec<(f64, f64)> = pts.iter().filter(|p| p.mean - ASYMPTOTE > 1e-6).map(|p| (p.length, (p.mean - ASYMPTOTE).ln())).collect();
    let (a0, p0) = if logs.len() >= 2 {
        let n = logs.len() as f64;
        let mx = logs.iter().map(|v| v.0).sum::<f64>() / n;
        let my = logs.iter().map(|v| v.1).sum::<f64>() / n;
        let sxx: f64 = logs.iter().map(|v| (v.0 - mx).powi(2)).sum();
        let sxy: f64 = logs.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
        let slope = (sxy / sxx).min(0.0);
        ((my - slope * mx).exp(), slope.exp().clamp(1e-3, 1.0))
    } else {
        (2.0 / 3.0, 0.9)
    };
    let free = opts.free_asymptote;
    let np = if free { 3 } else { 2 };
    let start = if free { DVector::from_vec(vec![a0, p0, ASYMPTOTE]) } else { DVector::from_vec(vec![a0, p0]) };
    let model = |q: &DVector<f64>| {
        let mut r = DVector::zeros(pts.len());
        let mut j = DMatrix::zeros(pts.len(), np);
        let b = if free { q[2] } else { ASYMPTOTE };
        for (k, pt) in pts.iter().enumerate() {
            let pl = q[1].abs().powf(pt.length);
            r[k] = w[k] * (b + q[0] * pl - pt.mean);
            j[(k, 0)] = w[k] * pl;
            j[(k, 1)] = w[k] * q[0] * pt.length * q[1].abs().powf(pt.length - 1.0) * q[1].signum();
            if free {
                j[(k, 2)] = w[k];
            }
        }
        (r, j)
    };
    let lm = LmOptions { max_iterations: 500, cost_tolerance: 0.0, step_tolerance: 1e-15 };
    let out = minimize(model, start, &lm);
    let asymptote = if free { out.params[2] } else { ASYMPTOTE };
    let residuals: Vec<f64> = out.residuals.iter().zip(&w).map(|(r, w)| -r / w).collect();
    if !out.converged {
        return Err(Error::Fit(format!("decay fit did not converge; residuals {residuals:?}")));
    }
    let mut p = out.params[1];
    if p > 1.0 && p < 1.0 + 1e-12 {
        p = 1.0;
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Fit(format!("decay {p} outside (0, 1]; residuals {residuals:?}")));
    }
    let cov = (out.jacobian.transpose() * &out.jacobian).try_inverse();
    let sd = |i: usize| cov.as_ref().map_or(f64::NAN, |c| c[(i, i)].max(0.0).sqrt());
    let (sigma_amplitude, sigma_p) = (sd(0), sd(1));
    let sigma_asymptote = if free { sd(2) } else { 0.0 };

    let clifford_fidelity = p + (1.0 - p) / 3.0;
    let sigma_clifford_fidelity = 2.0 / 3.0 * sigma_p;
    let [n_ls, n_1q] = opts.counts.unwrap_or_else(|| {
        let c = catalog();
        [c.mean_ls(), c.mean_1q()]
    });
    if n_ls <= 0.0 {
        return Err(Error::Fit("catalog mean LS count must be positive".into()));
    }
    let eps_ls = ((1.0 - clifford_fidelity) - n_1q * opts.single_qubit_error) / n_ls;
    Ok(SrbFit {
        p,
        amplitude: out.params[0],
        asymptote,
        asymptote_fixed: !free,
        clifford_fidelity,
        ls_fidelity: 1.0 - eps_ls,
        sigma_p,
        sigma_amplitude,
        sigma_asymptote,
        sigma_clifford_fidelity,
        sigma_ls_fidelity: sigma_clifford_fidelity / n_ls,
        n_ls,
        n_1q,
        single_qubit_error: opts.single_qubit_error,
        residuals,
    })
}

//! Compilation of Cliffords into global microwave rotations and LS gates.
//!
//! Words of the form `R_n G R_(n-1) ... G R_0` are fitted to each element with continuous
//! Euler angles, increasing the number of LS gates `n` until one fits. The z rotations of the
//! fitted word commute through the diagonal LS gate, so they are collected into one final z
//! rotation and realized as a pair of pi pulses.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::group::{clifford_group, phase_distance, CliffordGroup};
use super::lm::{minimize, LmOptions};
use crate::error::{Error, Result};
use crate::linalg::{cis, spin1, spin1_rotation, C64, I, ONE};

/// One native operation on the symmetric subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum NativeOp {
    /// Global microwave rotation by `theta` about the equatorial axis at azimuth `phi`.
    Rotation { phi: f64, theta: f64 },
    /// The echoed LS gate, diag(1, i, 1) on the symmetric subspace.
    Ls,
}

impl NativeOp {
    pub fn matrix(&self) -> Matrix3<C64> {
        match *self {
            NativeOp::Rotation { phi, theta } => spin1_rotation([phi.cos(), phi.sin(), 0.0], theta),
            NativeOp::Ls => ls_gate(),
        }
    }
}

/// The ideal LS gate on the symmetric subspace.
pub fn ls_gate() -> Matrix3<C64> {
    Matrix3::from_diagonal(&Vector3::new(ONE, I, ONE))
}

/// Native realization of one Clifford, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeSequence {
    pub ops: Vec<NativeOp>,
    pub n_ls: usize,
    pub n_1q: usize,
}

impl NativeSequence {
    fn new(ops: Vec<NativeOp>) -> Self {
        let n_ls = ops.iter().filter(|o| matches!(o, NativeOp::Ls)).count();
        NativeSequence { n_1q: ops.len() - n_ls, n_ls, ops }
    }

    /// Ideal unitary of the sequence.
    pub fn unitary(&self) -> Matrix3<C64> {
        compose(&self.ops)
    }
}

pub fn compose(ops: &[NativeOp]) -> Matrix3<C64> {
    ops.iter().fold(Matrix3::identity(), |u, o| o.matrix() * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompileOptions {
    pub max_ls: usize,
    /// Random restarts per LS count.
    pub restarts: usize,
    /// Largest accepted entrywise deviation of the fitted word.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { max_ls: 3, restarts: 40, tolerance: 1e-11, seed: 1 }
    }
}

fn rz(x: f64) -> Matrix3<C64> {
    Matrix3::from_diagonal(&Vector3::new(cis(x), ONE, cis(-x)))
}

fn ry(b: f64) -> Matrix3<C64> {
    spin1_rotation([0.0, 1.0, 0.0], b)
}

/// Euler form `Rz(a) Ry(b) Rz(c)` and its three partial derivatives.
fn euler(a: f64, b: f64, c: f64) -> (Matrix3<C64>, [Matrix3<C64>; 3]) {
    let [_, jy, jz] = spin1();
    let (za, yb, zc) = (rz(a), ry(b), rz(c));
    let u = za * yb * zc;
    let mi = C64::new(0.0, -1.0);
    (u, [jz * u * mi, za * (jy * yb) * zc * mi, u * jz * mi])
}

fn word_residual(p: &DVector<f64>, target: &Matrix3<C64>, n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let np = p.len();
    let g = ls_gate();
    // Factors in time order: R_0, G, R_1, ..., G, R_n.
    let mut factors = Vec::with_capacity(2 * n + 1);
    let mut derivs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            factors.push(g);
        }
        let (u, d) = euler(p[3 * k], p[3 * k + 1], p[3 * k + 2]);
        factors.push(u);
        derivs.push(d);
    }
    // before[i] is the product of factors[0..i] (time order), after[i] of factors[i+1..].
    let m = factors.len();
    let mut before = vec![Matrix3::identity(); m + 1];
    for i in 0..m {
        before[i + 1] = factors[i] * before[i];
    }
    let mut after = vec![Matrix3::identity(); m + 1];
    for i in (0..m).rev() {
        after[i] = after[i + 1] * factors[i];
    }
    let ph = cis(-p[np - 1]);
    let w = before[m] * ph;
    let mut r = DVector::zeros(18);
    let mut j = DMatrix::zeros(18, np);
    let fill = |col: &mut dyn FnMut(usize, f64), m: &Matrix3<C64>| {
        for (idx, z) in m.iter().enumerate() {
            col(2 * idx, z.re);
            col(2 * idx + 1, z.im);
        }
    };
    fill(&mut |i, v| r[i] = v, &(w - target));
    for k in 0..=n {
        let pos = 2 * k;
        for (q, d) in derivs[k].iter().enumerate() {
            let dm = after[pos + 1] * d * before[pos] * ph;
            fill(&mut |i, v| j[(i, 3 * k + q)] = v, &dm);
        }
    }
    let dph = w * C64::new(0.0, -1.0);
    fill(&mut |i, v| j[(i, np - 1)] = v, &dph);
    (r, j)
}

/// Converts fitted Euler angles into native operations, merging every z rotation into one
/// trailing pair of pi pulses.
fn to_native(p: &DVector<f64>, n: usize) -> Vec<NativeOp> {
    let mut ops = Vec::new();
    let mut z = 0.0;
    for k in 0..=n {
        if k > 0 {
            ops.push(NativeOp::Ls);
        }
        let (a, b, c) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
        z += c;
        // Ry(b) Rz(z) = Rz(z) R_(pi/2 - z)(b)
        ops.extend(rotation(PI / 2.0 - z, b));
        z += a;
    }
    ops.extend(z_rotation(z));
    ops
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// A rotation with its angle folded into [0, pi], or `None` if it is the identity.
fn rotation(phi: f64, theta: f64) -> Option<NativeOp> {
    let t = wrap(theta);
    if t.abs() < 1e-13 {
        return None;
    }
    let (phi, t) = if t < 0.0 { (phi + PI, -t) } else { (phi, t) };
    Some(NativeOp::Rotation { phi: wrap(phi), theta: t })
}

/// `exp(-i gamma Jz)` as two pi pulses, or nothing if it is trivial.
pub fn z_rotation(gamma: f64) -> Vec<NativeOp> {
    let g = wrap(gamma);
    if g.abs() < 1e-13 {
        return Vec::new();
    }
    vec![
        NativeOp::Rotation { phi: 0.0, theta: PI },
        NativeOp::Rotation { phi: wrap(g / 2.0), theta: PI },
    ]
}

/// Fits a word with `n` LS gates to `target`; returns the native operations on success.
pub fn fit_word(target: &Matrix3<C64>, n: usize, opts: &CompileOptions, rng: &mut ChaCha20Rng) -> Option<Vec<NativeOp>> {
    let lm = LmOptions { max_iterations: 400, cost_tolerance: 1e-28, step_tolerance: 1e-15 };
    for _ in 0..opts.restarts {
        let p0 = DVector::from_fn(3 * (n + 1) + 1, |_, _| rng.random_range(-PI..PI));
        let out = minimize(|p| word_residual(p, target, n), p0, &lm);
        if out.residuals.amax() < opts.tolerance {
            let ops = to_native(&out.params, n);
            if phase_distance(target, &compose(&ops)) < 10.0 * opts.tolerance {
                return Some(ops);
            }
        }
    }
    None
}

/// Compiles one group element, using the fewest LS gates found.
pub fn compile_clifford(group: &CliffordGroup, index: usize, opts: &CompileOptions) -> Result<NativeSequence> {
    let target = group.get(index).matrix;
    if index == 0 || phase_distance(&Matrix3::identity(), &target) < opts.tolerance {
        return Ok(NativeSequence::new(Vec::new()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    for n in 0..=opts.max_ls {
        if let Some(ops) = fit_word(&target, n, opts, &mut rng) {
            return Ok(NativeSequence::new(ops));
        }
    }
    Err(Error::Compile(format!("element {index} not reached with up to {} LS gates", opts.max_ls)))
}

/// Native sequences for every element in group order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub entries: Vec<NativeSequence>,
}

impl Catalog {
    pub fn build(group: &CliffordGroup, opts: &CompileOptions) -> Result<Self> {
        use rayon::prelude::*;
        let entries = (0..group.len())
            .into_par_iter()
            .map(|i| compile_clifford(group, i, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Catalog { entries })
    }

    pub fn mean_ls(&self) -> f64 {
        self.entries.iter().map(|e| e.n_ls as f64).sum::<f64>() / self.entries.len() as f64
    }

    pub fn mean_1q(&self) -> f64 {
        self.entries.iter().map(|e| e.n_1q as f64).sum::<f64>() / self.entries.len() as f64
    }

    pub fn max_ls(&self) -> usize {
        self.entries.iter().map(|e| e.n_ls).max().unwrap_or(0)
    }

    /// Largest phase-insensitive distance between an entry and its element.
    pub fn max_error(&self, group: &CliffordGroup) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| phase_distance(&group.get(i).matrix, &e.unitary()))
            .fold(0.0, f64::max)
    }
}

/// Shared catalog compiled with default options.
pub fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| match Catalog::build(clifford_group(), &CompileOptions::default()) {
        Ok(c) => c,
        Err(e) => panic!("clifford compilation failed: {e}"),
    })
}

//! Truncated harmonic-oscillator operators and Kronecker-structured application.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg::{cis, CMat, C64};

/// Annihilation operator on Fock states 0..=n_max.
pub fn annihilation(n_max: usize) -> DMatrix<f64> {
    let d = n_max + 1;
    DMatrix::from_fn(d, d, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 })
}

/// Position quadrature `a + a†` on Fock states 0..=n_max.
pub fn quadrature(n_max: usize) -> DMatrix<f64> {
    let a = annihilation(n_max);
    &a + a.transpose()
}

/// `exp(i eta (a + a†))` on the truncated space, exact for the truncated quadrature.
pub fn exp_i_quadrature(eta: f64, n_max: usize) -> CMat {
    let eig = SymmetricEigen::new(quadrature(n_max));
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|x| cis(eta * x)));
    &v * d * v.transpose()
}

/// Tensor product of per-mode operators acting on a row-major phonon register.
#[derive(Debug, Clone)]
pub struct KronOp {
    dims: Vec<usize>,
    /// Row-major dense factors; `None` is the identity.
    factors: Vec<Option<Vec<C64>>>,
    /// Row-major product matrix, kept for small registers where a plain matvec is fastest.
    dense: Option<Vec<C64>>,
}

const DENSE_LIMIT: usize = 64;

impl KronOp {
    pub fn identity(dims: &[usize]) -> Self {
        KronOp { dims: dims.to_vec(), factors: vec![None; dims.len()], dense: None }
    }

    pub fn from_factors(dims: &[usize], factors: Vec<Option<CMat>>) -> Self {
        assert_eq!(dims.len(), factors.len());
        let factors = factors
            .into_iter()
            .zip(dims)
            .map(|(f, &d)| {
                f.map(|m| {
                    assert_eq!(m.nrows(), d);
                    let mut v = Vec::with_capacity(d * d);
                    for r in 0..d {
                        for c in 0..d {
                            v.push(m[(r, c)]);
                        }
                    }
                    v
                })
            })
            .collect();
        KronOp { dims: dims.to_vec(), factors, dense: None }.with_dense()
    }

    fn with_dense(mut self) -> Self {
        let n = self.dim();
        if n <= DENSE_LIMIT && !self.is_identity() {
            let m = self.to_dense();
            self.dense = Some((0..n * n).map(|i| m[(i / n, i % n)]).collect());
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(Option::is_none)
    }

    pub fn adjoint(&self) -> KronOp {
        let factors = self
            .factors
            .iter()
            .zip(&self.dims)
            .map(|(f, &d)| {
                f.as_ref().map(|m| {
                    let mut t = vec![C64::new(0.0, 0.0); d * d];
                    for r in 0..d {
                        for c in 0..d {
                            t[c * d + r] = m[r * d + c].conj();
                        }
                    }
                    t
                })
            })
            .collect();
        KronOp { dims: self.dims.clone(), factors, dense: None }.with_dense()
    }

    fn apply_factor(&self, k: usize, src: &[C64], dst: &mut [C64]) {
        let m = self.factors[k].as_ref().expect("identity factor");
        let d = self.dims[k];
        let outer: usize = self.dims[..k].iter().product();
        let inner: usize = self.dims[k + 1..].iter().product();
        for o in 0..outer {
            let base = o * d * inner;
            for r in 0..d {
                let out = &mut dst[base + r * inner..base + (r + 1) * inner];
                out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for c in 0..d {
                    let coef = m[r * d + c];
                    if coef.re == 0.0 && coef.im == 0.0 {
                        continue;
                    }
                    let inp = &src[base + c * inner..base + (c + 1) * inner];
                    for (z, x) in out.iter_mut().zip(inp) {
                        *z += coef * x;
                    }
                }
            }
        }
    }

    /// `out = self * v`, using `tmp` as scratch of the same length.
    pub fn apply(&self, v: &[C64], out: &mut [C64], tmp: &mut [C64]) {
        if let Some(m) = &self.dense {
            let n = v.len();
            for (row, z) in m.chunks_exact(n).zip(out.iter_mut()) {
                let (mut re, mut im) = (0.0, 0.0);
                for (a, b) in row.iter().zip(v) {
                    re += a.re * b.re - a.im * b.im;
                    im += a.re * b.im + a.im * b.re;
                }
                *z = C64::new(re, im);
            }
            return;
        }
        let m = self.factors.iter().filter(|f| f.is_some()).count();
        if m == 0 {
            out.copy_from_slice(v);
            return;
        }
        // the final product must land in `out`
        let mut in_out = false;
        let active = (0..self.factors.len()).filter(|&k| self.factors[k].is_some());
        for (i, k) in active.enumerate() {
            let to_out = (m - 1 - i) % 2 == 0;
            if i == 0 {
                if to_out {
                    self.apply_factor(k, v, out);
                } else {
                    self.apply_factor(k, v, tmp);
                }
            } else if to_out {
                self.apply_factor(k, tmp, out);
            } else {
                self.apply_factor(k, out, tmp);
            }
            in_out = to_out;
        }
        debug_assert!(in_out);
    }

    /// Dense matrix of the full product, for tests and small systems.
    pub fn to_dense(&self) -> CMat {
        let mut acc = CMat::identity(1, 1);
        for (f, &d) in self.factors.iter().zip(&self.dims) {
            let m = match f {
                Some(v) => CMat::from_row_slice(d, d, v),
                None => CMat::identity(d, d),
            };
            acc = acc.kronecker(&m);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn exponential_is_unitary_and_small_eta_linear() {
        let u = exp_i_quadrature(0.3, 6);
        let id = CMat::identity(7, 7);
        assert!(max_abs_diff(&(&u * u.adjoint()), &id) < 1e-13);
        let eta = 1e-7;
        let v = exp_i_quadrature(eta, 6);
        let x = quadrature(6).map(|z| C64::new(0.0, eta * z));
        assert!(max_abs_diff(&(v - id - x), &CMat::zeros(7, 7)) < 1e-13);
    }

    #[test]
    fn kron_apply_matches_dense() {
        let dims = [3, 2, 4];
        let f = vec![Some(exp_i_quadrature(0.2, 2)), None, Some(exp_i_quadrature(-0.7, 3))];
        let op = KronOp::from_factors(&dims, f);
        let dense = op.to_dense();
        let v: Vec<C64> = (0..24).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut out = vec![C64::new(0.0, 0.0); 24];
        let mut tmp = out.clone();
        op.apply(&v, &mut out, &mut tmp);
        let want = &dense * nalgebra::DVector::from_vec(v.clone());
        for i in 0..24 {
            assert!((out[i] - want[i]).norm() < 1e-13);
        }
        let adj = op.adjoint();
        adj.apply(&v, &mut out, &mut tmp);
        let want = dense.adjoint() * nalgebra::DVector::from_vec(v);
        for i in 0..24 {
            assert!((out[i] - want[i]).norm() < 1e-13);
        }
    }
}

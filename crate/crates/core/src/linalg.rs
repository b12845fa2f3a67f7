//! Small dense helpers shared by the simulation modules.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CMat3 = Matrix3<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn cis(x: f64) -> C64 {
    C64::new(x.cos(), x.sin())
}

/// `exp(-i t H)` for a Hermitian matrix via its eigendecomposition.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let n = h.nrows();
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let mut d = CMat::zeros(n, n);
    for k in 0..n {
        d[(k, k)] = cis(-t * eig.eigenvalues[k]);
    }
    v * d * v.adjoint()
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spin-1 angular momentum matrices in the ordered basis m = -1, 0, +1.
pub fn spin1() -> [CMat3; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    let jx = CMat3::new(
        ZERO, r(s), ZERO,
        r(s), ZERO, r(s),
        ZERO, r(s), ZERO,
    );
    let jy = CMat3::new(
        ZERO, C64::new(0.0, s), ZERO,
        C64::new(0.0, -s), ZERO, C64::new(0.0, s),
        ZERO, C64::new(0.0, -s), ZERO,
    );
    let jz = CMat3::from_diagonal(&nalgebra::Vector3::new(r(-1.0), ZERO, r(1.0)));
    [jx, jy, jz]
}

/// Spin-1 rotation `exp(-i theta n.J)` for a unit axis `n`.
pub fn spin1_rotation(n: [f64; 3], theta: f64) -> CMat3 {
    let [jx, jy, jz] = spin1();
    let nj = jx * C64::from(n[0]) + jy * C64::from(n[1]) + jz * C64::from(n[2]);
    let nj2 = nj * nj;
    CMat3::identity() - nj * C64::new(0.0, theta.sin()) - nj2 * C64::from(1.0 - theta.cos())
}

/// `exp(-i theta/2 (cos(phi) X + sin(phi) Y))` on a single qubit in the ordered basis (down, up),
/// with up the +1 eigenstate of Z.
pub fn qubit_rotation(phi: f64, theta: f64) -> nalgebra::Matrix2<C64> {
    let c = C64::from((theta / 2.0).cos());
    let s = (theta / 2.0).sin();
    nalgebra::Matrix2::new(c, -I * s * cis(phi), -I * s * cis(-phi), c)
}

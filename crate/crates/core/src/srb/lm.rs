//! Small dense Levenberg-Marquardt solver shared by the compiler and the decay fit.

use nalgebra::{DMatrix, DVector};

pub(crate) struct LmOptions {
    pub max_iterations: usize,
    /// Stop once the sum of squared residuals falls below this.
    pub cost_tolerance: f64,
    /// Stop once the relative parameter step falls below this.
    pub step_tolerance: f64,
}

pub(crate) struct LmOutcome {
    pub params: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub residuals: DVector<f64>,
    pub converged: bool,
}

/// Minimizes `|r(p)|^2`. `f` returns the residual vector and its Jacobian.
pub(crate) fn minimize<F>(mut f: F, p0: DVector<f64>, opts: &LmOptions) -> LmOutcome
where
    F: FnMut(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let mut p = p0;
    let (mut r, mut j) = f(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = cost <= opts.cost_tolerance;
    let mut it = 0;
    while !converged && it < opts.max_iterations && cost.is_finite() {
        it += 1;
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let mut a = jtj.clone();
        for k in 0..a.nrows() {
            a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
        }
        let step = match a.cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => {
                lambda *= 10.0;
                if lambda > 1e16 {
                    break;
                }
                continue;
            }
        };
        let trial = &p + &step;
        let (rt, jt2) = f(&trial);
        let ct = rt.norm_squared();
        if ct.is_finite() && ct < cost {
            let small = step.norm() <= opts.step_tolerance * (p.norm() + opts.step_tolerance);
            p = trial;
            r = rt;
            j = jt2;
            cost = ct;
            lambda = (lambda / 3.0).max(1e-15);
            converged = cost <= opts.cost_tolerance || small;
        } else {
            lambda *= 4.0;
            if lambda > 1e16 {
                // No downhill step exists at working precision.
                converged = true;
                break;
            }
        }
    }
    LmOutcome { params: p, jacobian: j, residuals: r, converged }
}

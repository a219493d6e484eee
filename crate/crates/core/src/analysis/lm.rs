//! Damped Gauss-Newton (Levenberg-Marquardt) least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once every parameter moves by less than this, relative to its size.
    pub relative_step: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, relative_step: 1e-10, initial_damping: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmSolution {
    pub params: DVector<f64>,
    /// (JᵀJ)⁻¹ at the solution, when invertible.
    pub covariance: Option<DMatrix<f64>>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
}

/// Minimizes Σ r(p)² given residuals `r` and their Jacobian `∂r/∂p`.
pub fn levenberg_marquardt<R, J>(residuals: R, jacobian: J, p0: DVector<f64>, opts: &LmOptions) -> Result<LmSolution>
where
    R: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    let mut p = p0;
    let mut r = residuals(&p)?;
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_damping;
    let n = p.len();
    for iteration in 1..=opts.max_iterations {
        let jac = jacobian(&p)?;
        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * &r;
        let converged;
        loop {
            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let step = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-&gradient)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        converged = true;
                        break;
                    }
                    continue;
                }
            };
            let candidate = &p + &step;
            let trial = residuals(&candidate).ok().filter(|t| t.iter().all(|v| v.is_finite()));
            match trial {
                Some(t) if t.norm_squared() <= cost => {
                    // scale of each parameter: its size or its curvature width, whichever is larger
                    let small = (0..n).all(|j| {
                        let width = jtj[(j, j)].recip().sqrt();
                        step[j].abs() <= opts.relative_step * (candidate[j].abs() + width)
                    });
                    p = candidate;
                    cost = t.norm_squared();
                    r = t;
                    lambda = (lambda / 10.0).max(1e-15);
                    converged = small;
                    break;
                }
                _ => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        // no downhill step left: at the minimum to machine precision
                        converged = true;
                        break;
                    }
                }
            }
        }
        if converged {
            let jac = jacobian(&p)?;
            let covariance = (jac.transpose() * &jac).try_inverse();
            return Ok(LmSolution { params: p, covariance, cost, iterations: iteration });
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iterations })
}

/// Central-difference Jacobian.
pub fn numeric_jacobian<R>(residuals: &R, p: &DVector<f64>) -> Result<DMatrix<f64>>
where
    R: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let base = residuals(p)?;
    let mut jac = DMatrix::zeros(base.len(), p.len());
    for j in 0..p.len() {
        let h = 1e-6 * p[j].abs().max(1e-3);
        let mut up = p.clone();
        let mut down = p.clone();
        up[j] += h;
        down[j] -= h;
        let col = (residuals(&up)? - residuals(&down)?) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

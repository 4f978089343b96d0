//! The square-root-ridge estimator: the dual of Wasserstein-robust linear IV.
//!
//! Minimizes `sqrt(||P_Z y - P_Z X b||^2 / n) + sqrt(rho (||b||^2 + 1))`
//! where `P_Z` projects onto the instrument column space. Solved by damped
//! Newton on a lightly smoothed objective (1e-12 inside each square root);
//! `rho = 0` reduces to two-stage least squares via the normal equations.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;

const SMOOTHING: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-8;

pub fn sqrt_ridge(y: &Array1<f64>, x: &Array2<f64>, z: &Array2<f64>, rho: f64) -> Result<Array1<f64>> {
    let n = y.len();
    let p = x.ncols();
    let k = z.ncols();
    if x.nrows() != n || z.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "design rows",
            expected: n,
            got: x.nrows().min(z.nrows()),
        });
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: format!("must be nonnegative, got {rho}"),
        });
    }
    if n <= k || k < p {
        return Err(Error::InvalidParameter {
            name: "dimensions",
            reason: format!("need n > dim(Z) >= dim(X), got n = {n}, dim(Z) = {k}, dim(X) = {p}"),
        });
    }

    let quad = ProjectedQuadratic::new(y, x, z)?;

    // rho = 0: the regularizer vanishes identically; 2SLS normal equations
    let beta0 = linalg::solve(&quad.a, &quad.b)?;
    if rho == 0.0 {
        return Ok(beta0);
    }

    let mut beta = beta0;
    let mut obj = quad.objective(&beta, rho);
    for _ in 0..500 {
        let grad = quad.gradient(&beta, rho);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= GRAD_TOL {
            break;
        }
        let hess = quad.hessian(&beta, rho);
        let step = newton_direction(&hess, &grad, p)?;

        // backtracking line search on the true objective
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &beta - &step.mapv(|s| t * s);
            let cand_obj = quad.objective(&candidate, rho);
            if cand_obj <= obj - 1e-4 * t * grad.iter().zip(step.iter()).map(|(g, s)| g * s).sum::<f64>().abs()
                || cand_obj < obj
            {
                beta = candidate;
                obj = cand_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break; // stuck at numerical floor
        }
    }
    Ok(beta)
}

/// Objective value at `beta` (exposed for convexity and path diagnostics).
pub fn sqrt_ridge_objective(
    y: &Array1<f64>,
    x: &Array2<f64>,
    z: &Array2<f64>,
    rho: f64,
    beta: &Array1<f64>,
) -> Result<f64> {
    let quad = ProjectedQuadratic::new(y, x, z)?;
    Ok(quad.objective(beta, rho))
}

/// Caches `A = X'PX/n`, `b = X'Py/n`, `c0 = y'Py/n` for the projected
/// residual quadratic `Q(beta) = c0 - 2 b'beta + beta'A beta`.
struct ProjectedQuadratic {
    a: Array2<f64>,
    b: Array1<f64>,
    c0: f64,
}

impl ProjectedQuadratic {
    fn new(y: &Array1<f64>, x: &Array2<f64>, z: &Array2<f64>) -> Result<Self> {
        let n = y.len();
        let k = z.ncols();

        // Gram of Z with rank check
        let ztz = z.t().dot(z);
        let mut chol_ok = true;
        {
            // quick positive-definiteness probe via Cholesky
            let probe = linalg::solve_spd(&ztz, &Array1::zeros(k));
            if probe.is_err() {
                chol_ok = false;
            }
        }
        if !chol_ok {
            return Err(Error::RankDeficient(
                "instrument matrix Z is rank deficient".into(),
            ));
        }

        // projected data: PX = Z (Z'Z)^{-1} Z'X, computed column by column
        let ztx = z.t().dot(x);
        let zty = z.t().dot(y);
        let p = x.ncols();
        let mut w = Array2::zeros((k, p));
        for j in 0..p {
            let col = linalg::solve_spd(&ztz, &ztx.column(j).to_owned())
                .map_err(|_| Error::RankDeficient("instrument matrix Z is rank deficient".into()))?;
            w.column_mut(j).assign(&col);
        }
        let wy = linalg::solve_spd(&ztz, &zty)
            .map_err(|_| Error::RankDeficient("instrument matrix Z is rank deficient".into()))?;

        // X'P X = (Z'X)' (Z'Z)^{-1} (Z'X), and similarly for the other terms
        let a = ztx.t().dot(&w).mapv(|v| v / n as f64);
        let b = ztx.t().dot(&wy).mapv(|v| v / n as f64);
        let c0 = zty.dot(&wy) / n as f64;
        Ok(Self { a, b, c0 })
    }

    fn residual_quadratic(&self, beta: &Array1<f64>) -> f64 {
        let abeta = self.a.dot(beta);
        (self.c0 - 2.0 * self.b.dot(beta) + beta.dot(&abeta)).max(0.0)
    }

    fn objective(&self, beta: &Array1<f64>, rho: f64) -> f64 {
        let fit = (self.residual_quadratic(beta) + SMOOTHING).sqrt();
        let norm2: f64 = beta.iter().map(|v| v * v).sum();
        fit + (rho * (norm2 + 1.0) + SMOOTHING).sqrt()
    }

    fn gradient(&self, beta: &Array1<f64>, rho: f64) -> Array1<f64> {
        let r1 = (self.residual_quadratic(beta) + SMOOTHING).sqrt();
        let norm2: f64 = beta.iter().map(|v| v * v).sum();
        let r2 = (rho * (norm2 + 1.0) + SMOOTHING).sqrt();
        let first = (self.a.dot(beta) - &self.b).mapv(|v| v / r1);
        first + beta.mapv(|v| rho * v / r2)
    }

    fn hessian(&self, beta: &Array1<f64>, rho: f64) -> Array2<f64> {
        let p = beta.len();
        let q = self.residual_quadratic(beta) + SMOOTHING;
        let r1 = q.sqrt();
        let grad_q = self.a.dot(beta) - &self.b;
        let norm2: f64 = beta.iter().map(|v| v * v).sum();
        let s = rho * (norm2 + 1.0) + SMOOTHING;
        let r2 = s.sqrt();

        let mut h = Array2::zeros((p, p));
        for i in 0..p {
            for j in 0..p {
                h[[i, j]] = self.a[[i, j]] / r1 - grad_q[i] * grad_q[j] / (q * r1)
                    + if i == j { rho / r2 } else { 0.0 }
                    - rho * rho * beta[i] * beta[j] / (s * r2);
            }
        }
        h
    }
}

fn newton_direction(hess: &Array2<f64>, grad: &Array1<f64>, p: usize) -> Result<Array1<f64>> {
    let mut damping = 0.0;
    for _ in 0..8 {
        let mut h = hess.clone();
        for i in 0..p {
            h[[i, i]] += damping;
        }
        if let Ok(d) = linalg::solve_spd(&h, grad) {
            return Ok(d);
        }
        damping = if damping == 0.0 { 1e-10 } else { damping * 100.0 };
    }
    // gradient fallback
    Ok(grad.clone())
}

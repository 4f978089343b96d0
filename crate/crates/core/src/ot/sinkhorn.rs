//! Entropy-regularized optimal transport.
//!
//! Log-stabilized Sinkhorn scaling with an epsilon-halving warm-start
//! schedule. Potentials are absorbed into the kernel whenever the scaling
//! vectors threaten to overflow, and rows/columns whose kernel mass
//! underflows are repaired with a hard c-transform, so the iteration never
//! produces NaN.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::types::{Coupling, CostMatrix, DiscreteDistribution};

pub const DEFAULT_SINKHORN_TOL: f64 = 1e-6;
pub const DEFAULT_SINKHORN_MAX_ITER: usize = 10_000;

/// Solves entropic OT between two probability distributions and returns the
/// plan together with its (sharp) transport cost and dual potentials.
///
/// Stops when the worst marginal violation drops below `tol`; reports the
/// last marginal error if `max_iter` is exhausted first.
pub fn sinkhorn(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    c: &CostMatrix,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Coupling> {
    c.check_dims(p, q)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be positive, got {epsilon}"),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    for (dist, side) in [(p, "source"), (q, "target")] {
        if !dist.is_probability() {
            return Err(Error::InvalidWeights(format!(
                "sinkhorn requires probability distributions; {side} weights sum to {}",
                dist.total_mass()
            )));
        }
    }

    let rows = p.support_indices();
    let cols = q.support_indices();
    let a: Array1<f64> = rows.iter().map(|&i| p.weights()[i]).collect();
    let b: Array1<f64> = cols.iter().map(|&j| q.weights()[j]).collect();
    let mut cost = Array2::zeros((rows.len(), cols.len()));
    for (ii, &i) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            cost[[ii, jj]] = c.entries()[[i, j]];
        }
    }

    let state = scaled_sinkhorn(&a, &b, &cost, epsilon, tol, max_iter)?;

    let (full_n, full_m) = (p.len(), q.len());
    let mut mass = Array2::zeros((full_n, full_m));
    let mut phi = Array1::zeros(full_n);
    let mut psi = Array1::zeros(full_m);
    for (ii, &i) in rows.iter().enumerate() {
        phi[i] = state.phi[ii];
        for (jj, &j) in cols.iter().enumerate() {
            mass[[i, j]] = state.plan[[ii, jj]];
        }
    }
    for (jj, &j) in cols.iter().enumerate() {
        psi[j] = state.psi[jj];
    }

    Ok(Coupling::from_mass(
        mass,
        c.entries(),
        p.weights(),
        q.weights(),
        Some((phi, psi)),
    ))
}

pub(crate) struct SinkhornState {
    pub plan: Array2<f64>,
    pub phi: Array1<f64>,
    pub psi: Array1<f64>,
}

/// Core stabilized iteration on positive weights.
pub(crate) fn scaled_sinkhorn(
    a: &Array1<f64>,
    b: &Array1<f64>,
    cost: &Array2<f64>,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SinkhornState> {
    let (n, m) = (a.len(), b.len());
    let max_c = cost.iter().copied().fold(0.0, f64::max);

    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(m);
    let mut u = Array1::<f64>::ones(n);
    let mut v = Array1::<f64>::ones(m);
    let mut kernel = Array2::<f64>::zeros((n, m));

    let mut eps_cur = if max_c > 0.0 {
        (0.5 * max_c).max(epsilon)
    } else {
        epsilon
    };
    let scaling_budget = (max_iter / 10 + 1).min(100);
    let mut iterations = 0usize;
    let mut marginal_error = f64::INFINITY;

    loop {
        let at_target = eps_cur <= epsilon * (1.0 + 1e-12);
        rebuild_kernel(&mut kernel, &f, &g, cost, eps_cur);
        repair_dead_rows(&mut kernel, &mut f, &mut g, cost, eps_cur);
        u.fill(1.0);
        v.fill(1.0);

        let budget = if at_target {
            max_iter.saturating_sub(iterations)
        } else {
            scaling_budget
        };

        let mut converged = false;
        for it in 0..budget {
            // v_j = b_j / (K' u)_j
            let ktu = matvec_t(&kernel, &u);
            for j in 0..m {
                v[j] = b[j] / ktu[j].max(f64::MIN_POSITIVE);
            }
            // u_i = a_i / (K v)_i
            let kv = matvec(&kernel, &v);
            for i in 0..n {
                u[i] = a[i] / kv[i].max(f64::MIN_POSITIVE);
            }
            iterations += 1;

            let extreme = u.iter().chain(v.iter()).any(|&s| s > 1e60 || s < 1e-60);
            if extreme {
                absorb(&mut f, &mut g, &mut u, &mut v, eps_cur);
                rebuild_kernel(&mut kernel, &f, &g, cost, eps_cur);
                repair_dead_rows(&mut kernel, &mut f, &mut g, cost, eps_cur);
            }

            if at_target && (it % 5 == 4 || it + 1 == budget) {
                let ktu = matvec_t(&kernel, &u);
                marginal_error = (0..m)
                    .map(|j| (v[j] * ktu[j] - b[j]).abs())
                    .fold(0.0, f64::max);
                if marginal_error <= tol {
                    converged = true;
                    break;
                }
            }
        }

        if at_target {
            if !converged && marginal_error > tol {
                if !marginal_error.is_finite() {
                    let ktu = matvec_t(&kernel, &u);
                    marginal_error = (0..m)
                        .map(|j| (v[j] * ktu[j] - b[j]).abs())
                        .fold(0.0, f64::max);
                }
                return Err(Error::SinkhornNotConverged {
                    iterations,
                    marginal_error,
                    tol,
                });
            }
            break;
        }
        absorb(&mut f, &mut g, &mut u, &mut v, eps_cur);
        if iterations >= max_iter {
            // budget exhausted during warm-start levels: jump to the target
            eps_cur = epsilon;
        } else {
            eps_cur = (eps_cur * 0.5).max(epsilon);
        }
    }

    let mut plan = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            plan[[i, j]] = u[i] * kernel[[i, j]] * v[j];
        }
    }
    let phi = Array1::from_shape_fn(n, |i| f[i] + eps_cur * u[i].ln());
    let psi = Array1::from_shape_fn(m, |j| g[j] + eps_cur * v[j].ln());
    Ok(SinkhornState { plan, phi, psi })
}

fn rebuild_kernel(
    kernel: &mut Array2<f64>,
    f: &Array1<f64>,
    g: &Array1<f64>,
    cost: &Array2<f64>,
    eps: f64,
) {
    let (n, m) = kernel.dim();
    for i in 0..n {
        for j in 0..m {
            kernel[[i, j]] = ((f[i] + g[j] - cost[[i, j]]) / eps).exp();
        }
    }
}

/// If a kernel row or column underflowed to zero, reset its potential to the
/// hard c-transform of the other side and rebuild that slice.
fn repair_dead_rows(
    kernel: &mut Array2<f64>,
    f: &mut Array1<f64>,
    g: &mut Array1<f64>,
    cost: &Array2<f64>,
    eps: f64,
) {
    let (n, m) = kernel.dim();
    for i in 0..n {
        if kernel.row(i).iter().all(|&k| k == 0.0) {
            f[i] = (0..m)
                .map(|j| cost[[i, j]] - g[j])
                .fold(f64::INFINITY, f64::min);
            for j in 0..m {
                kernel[[i, j]] = ((f[i] + g[j] - cost[[i, j]]) / eps).exp();
            }
        }
    }
    for j in 0..m {
        if kernel.column(j).iter().all(|&k| k == 0.0) {
            g[j] = (0..n)
                .map(|i| cost[[i, j]] - f[i])
                .fold(f64::INFINITY, f64::min);
            for i in 0..n {
                kernel[[i, j]] = ((f[i] + g[j] - cost[[i, j]]) / eps).exp();
            }
        }
    }
}

fn absorb(
    f: &mut Array1<f64>,
    g: &mut Array1<f64>,
    u: &mut Array1<f64>,
    v: &mut Array1<f64>,
    eps: f64,
) {
    for (fi, ui) in f.iter_mut().zip(u.iter_mut()) {
        *fi += eps * ui.ln();
        *ui = 1.0;
    }
    for (gj, vj) in g.iter_mut().zip(v.iter_mut()) {
        *gj += eps * vj.ln();
        *vj = 1.0;
    }
}

fn matvec(k: &Array2<f64>, x: &Array1<f64>) -> Array1<f64> {
    let (n, m) = k.dim();
    let mut out = Array1::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..m {
            acc += k[[i, j]] * x[j];
        }
        out[i] = acc;
    }
    out
}

fn matvec_t(k: &Array2<f64>, x: &Array1<f64>) -> Array1<f64> {
    let (n, m) = k.dim();
    let mut out = Array1::zeros(m);
    for i in 0..n {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for j in 0..m {
            out[j] += k[[i, j]] * xi;
        }
    }
    out
}

//! Unbalanced optimal transport with KL marginal relaxation.
//!
//! Minimizes
//! `<C, g> + eps*KL(g || p (x) q) + rho*KL(g1 || p) + rho*KL(g'1 || q)`
//! over nonnegative plans `g`, where `KL(a||b) = sum a*log(a/b) - a + b` is
//! the unnormalized divergence. Solved by stabilized scaling iterations with
//! the marginal-relaxation exponent `rho/(rho+eps)`; the `eps = 0` problem is
//! annealed through a decreasing-epsilon schedule (the KL penalties make it
//! nonlinear, so there is no LP to fall back on).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::types::{CostMatrix, DiscreteDistribution, UnbalancedCoupling};

pub const DEFAULT_UNBALANCED_MAX_ITER: usize = 50_000;

/// Cell guard for the annealed `eps = 0` path.
pub const UNBALANCED_EXACT_CELL_LIMIT: u128 = 10_000;

pub fn unbalanced_sinkhorn(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    c: &CostMatrix,
    epsilon: f64,
    rho: f64,
) -> Result<UnbalancedCoupling> {
    unbalanced_sinkhorn_with(p, q, c, epsilon, rho, 0.0, DEFAULT_UNBALANCED_MAX_ITER)
}

/// [`unbalanced_sinkhorn`] with explicit stopping controls. `tol` bounds the
/// sup-norm change of the dual potentials per iteration (0 picks a default
/// tied to the cost scale).
pub fn unbalanced_sinkhorn_with(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    c: &CostMatrix,
    epsilon: f64,
    rho: f64,
    tol: f64,
    max_iter: usize,
) -> Result<UnbalancedCoupling> {
    c.check_dims(p, q)?;
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: format!("must be positive, got {rho}"),
        });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be nonnegative, got {epsilon}"),
        });
    }

    let rows = p.support_indices();
    let cols = q.support_indices();
    let (n, m) = (rows.len(), cols.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("distribution with no positive atoms"));
    }
    if epsilon == 0.0 && (n as u128) * (m as u128) > UNBALANCED_EXACT_CELL_LIMIT {
        return Err(Error::SizeGuard {
            context: "annealed unbalanced OT (eps = 0)",
            size: (n as u128) * (m as u128),
            limit: UNBALANCED_EXACT_CELL_LIMIT,
        });
    }

    let a: Array1<f64> = rows.iter().map(|&i| p.weights()[i]).collect();
    let b: Array1<f64> = cols.iter().map(|&j| q.weights()[j]).collect();
    let mut cost = Array2::zeros((n, m));
    for (ii, &i) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            cost[[ii, jj]] = c.entries()[[i, j]];
        }
    }
    let max_c = cost.iter().copied().fold(0.0, f64::max);
    let eps_target = if epsilon > 0.0 {
        epsilon
    } else {
        1e-7 * max_c.max(1.0)
    };
    let tol = if tol > 0.0 {
        tol
    } else {
        1e-11 * (1.0 + max_c)
    };

    let plan_small = solve_scaled(&a, &b, &cost, eps_target, rho, tol, max_iter)?;

    let (full_n, full_m) = (p.len(), q.len());
    let mut mass = Array2::zeros((full_n, full_m));
    for (ii, &i) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            mass[[i, j]] = plan_small[[ii, jj]];
        }
    }

    let row_sums = mass.sum_axis(ndarray::Axis(1));
    let col_sums = mass.sum_axis(ndarray::Axis(0));
    let transport_cost: f64 = mass
        .iter()
        .zip(c.entries().iter())
        .map(|(&g, &cc)| if g > 0.0 { g * cc } else { 0.0 })
        .sum();
    let mut objective = transport_cost
        + rho * kl_unnormalized(&row_sums, p.weights())
        + rho * kl_unnormalized(&col_sums, q.weights());
    if epsilon > 0.0 {
        objective += epsilon * kl_vs_product(&mass, p.weights(), q.weights());
    }

    Ok(UnbalancedCoupling {
        destroyed_mass_source: p.weights() - &row_sums,
        destroyed_mass_target: q.weights() - &col_sums,
        mass,
        objective,
        epsilon,
        rho,
    })
}

/// Stabilized scaling loop at a fixed target epsilon, warm-started through a
/// halving schedule from `0.5 * max(C)`.
fn solve_scaled(
    a: &Array1<f64>,
    b: &Array1<f64>,
    cost: &Array2<f64>,
    eps_target: f64,
    rho: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    let (n, m) = (a.len(), b.len());
    let max_c = cost.iter().copied().fold(0.0, f64::max);

    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(m);
    let mut u = Array1::<f64>::ones(n);
    let mut v = Array1::<f64>::ones(m);
    let mut kernel = Array2::<f64>::zeros((n, m));

    let mut eps = if max_c > 0.0 {
        (0.5 * max_c).max(eps_target)
    } else {
        eps_target
    };
    let scaling_budget = (max_iter / 10 + 1).min(200);
    let mut iterations = 0usize;

    loop {
        let at_target = eps <= eps_target * (1.0 + 1e-12);
        let tau = rho / (rho + eps);
        build_kernel(&mut kernel, &f, &g, cost, eps);
        u.fill(1.0);
        v.fill(1.0);
        // leftover damping from the absorbed potentials
        let wf: Array1<f64> = f.mapv(|fi| (-fi / (rho + eps)).exp());
        let wg: Array1<f64> = g.mapv(|gj| (-gj / (rho + eps)).exp());

        let budget = if at_target {
            max_iter.saturating_sub(iterations).max(1)
        } else {
            scaling_budget
        };

        let mut rebuilt = false;
        for _ in 0..budget {
            // u_i = exp(-f_i/(rho+eps)) * (sum_j b_j K_ij v_j)^(-tau)
            let mut delta = 0.0_f64;
            let mut kbv = Array1::<f64>::zeros(n);
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += kernel[[i, j]] * b[j] * v[j];
                }
                kbv[i] = acc;
            }
            for i in 0..n {
                let new_u = if kbv[i] > 0.0 {
                    wf[i] * kbv[i].powf(-tau)
                } else {
                    // empty row mass: the optimal response destroys the atom
                    wf[i]
                };
                let change = eps * (new_u.max(1e-300) / u[i].max(1e-300)).ln().abs();
                delta = delta.max(change);
                u[i] = new_u;
            }

            let mut kau = Array1::<f64>::zeros(m);
            for i in 0..n {
                let aui = a[i] * u[i];
                if aui == 0.0 {
                    continue;
                }
                for j in 0..m {
                    kau[j] += kernel[[i, j]] * aui;
                }
            }
            for j in 0..m {
                let new_v = if kau[j] > 0.0 {
                    wg[j] * kau[j].powf(-tau)
                } else {
                    wg[j]
                };
                let change = eps * (new_v.max(1e-300) / v[j].max(1e-300)).ln().abs();
                delta = delta.max(change);
                v[j] = new_v;
            }
            iterations += 1;

            if u.iter().chain(v.iter()).any(|&s| s > 1e60 || s < 1e-60) {
                for (fi, ui) in f.iter_mut().zip(u.iter_mut()) {
                    *fi += eps * ui.max(1e-300).ln();
                    *ui = 1.0;
                }
                for (gj, vj) in g.iter_mut().zip(v.iter_mut()) {
                    *gj += eps * vj.max(1e-300).ln();
                    *vj = 1.0;
                }
                rebuilt = true;
                break;
            }

            if at_target && delta <= tol {
                break;
            }
        }
        if rebuilt && !(at_target && iterations >= max_iter) {
            continue; // same eps, kernel refreshed with absorbed potentials
        }

        // absorb scalings before changing levels or finishing
        for (fi, ui) in f.iter_mut().zip(u.iter_mut()) {
            *fi += eps * ui.max(1e-300).ln();
            *ui = 1.0;
        }
        for (gj, vj) in g.iter_mut().zip(v.iter_mut()) {
            *gj += eps * vj.max(1e-300).ln();
            *vj = 1.0;
        }
        if at_target {
            break;
        }
        eps = (eps * 0.5).max(eps_target);
    }

    // gamma_ij = a_i b_j exp((f_i + g_j - C_ij)/eps)
    let mut plan = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let e = ((f[i] + g[j] - cost[[i, j]]) / eps_target).min(700.0);
            plan[[i, j]] = a[i] * b[j] * e.exp();
        }
    }
    Ok(plan)
}

fn build_kernel(
    kernel: &mut Array2<f64>,
    f: &Array1<f64>,
    g: &Array1<f64>,
    cost: &Array2<f64>,
    eps: f64,
) {
    let (n, m) = kernel.dim();
    for i in 0..n {
        for j in 0..m {
            // clamp keeps transient positive exponents finite at tiny eps
            let e = ((f[i] + g[j] - cost[[i, j]]) / eps).min(700.0);
            kernel[[i, j]] = e.exp();
        }
    }
}

/// `KL(x || y) = sum x log(x/y) - x + y`, with `0 log 0 = 0`.
fn kl_unnormalized(x: &Array1<f64>, y: &Array1<f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(&xi, &yi)| {
            if xi > 0.0 && yi > 0.0 {
                xi * (xi / yi).ln() - xi + yi
            } else {
                yi
            }
        })
        .sum()
}

fn kl_vs_product(mass: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..mass.nrows() {
        for j in 0..mass.ncols() {
            let g = mass[[i, j]];
            let r = a[i] * b[j];
            if g > 0.0 && r > 0.0 {
                total += g * (g / r).ln() - g + r;
            } else {
                total += r;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::solve_exact;
    use ndarray::{Array1, Array2};

    fn dist_1d(points: &[f64], weights: &[f64]) -> DiscreteDistribution {
        let n = points.len();
        DiscreteDistribution::probability(
            Array2::from_shape_vec((n, 1), points.to_vec()).unwrap(),
            Array1::from_vec(weights.to_vec()),
        )
        .unwrap()
    }

    #[test]
    fn dirac_pair_keeps_full_mass() {
        let p = dist_1d(&[0.0], &[1.0]);
        let c = CostMatrix::sq_euclidean(&p, &p).unwrap();
        let plan = unbalanced_sinkhorn(&p, &p, &c, 0.0, 1.0).unwrap();
        assert!((plan.transported_mass() - 1.0).abs() < 1e-6, "{}", plan.transported_mass());
        assert!(plan.objective.abs() < 1e-6);
    }

    #[test]
    fn distant_dirac_destroys_mass() {
        // transporting costs M^2 = 10^4, destroying costs 2*rho = 2
        let p = dist_1d(&[0.0], &[1.0]);
        let q = dist_1d(&[100.0], &[1.0]);
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let plan = unbalanced_sinkhorn(&p, &q, &c, 0.0, 1.0).unwrap();
        assert!(plan.transported_mass() < 1e-8, "{}", plan.transported_mass());
        assert!((plan.objective - 2.0).abs() < 1e-6, "{}", plan.objective);
        assert!((plan.destroyed_mass_source[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn huge_rho_recovers_balanced_plan() {
        let p = dist_1d(&[0.0, 1.0], &[0.5, 0.5]);
        let q = dist_1d(&[1.0, 2.0], &[0.5, 0.5]);
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let exact = solve_exact(&p, &q, &c).unwrap();
        let plan = unbalanced_sinkhorn(&p, &q, &c, 1e-3, 1e6).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (plan.mass[[i, j]] - exact.mass[[i, j]]).abs() < 1e-3,
                    "cell ({i},{j}): {} vs {}",
                    plan.mass[[i, j]],
                    exact.mass[[i, j]]
                );
            }
        }
    }

    #[test]
    fn transported_mass_grows_toward_one_with_rho() {
        let p = dist_1d(&[0.0, 1.0], &[0.5, 0.5]);
        let q = dist_1d(&[0.3, 1.4], &[0.5, 0.5]);
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let mut prev = 0.0;
        for rho in [1e2, 1e4, 1e6] {
            let plan = unbalanced_sinkhorn(&p, &q, &c, 1e-3, rho).unwrap();
            let mass = plan.transported_mass();
            assert!(mass >= prev - 1e-12, "mass not monotone: {prev} -> {mass}");
            prev = mass;
        }
        assert!((prev - 1.0).abs() < 1e-3, "{prev}");
    }

    #[test]
    fn rejects_bad_rho() {
        let p = dist_1d(&[0.0], &[1.0]);
        let c = CostMatrix::sq_euclidean(&p, &p).unwrap();
        assert!(unbalanced_sinkhorn(&p, &p, &c, 0.1, 0.0).is_err());
        assert!(unbalanced_sinkhorn(&p, &p, &c, 0.1, -1.0).is_err());
    }
}

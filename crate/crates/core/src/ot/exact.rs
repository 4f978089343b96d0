//! Exact solver for the discrete transportation problem.
//!
//! Primal simplex on the transportation polytope with a spanning-tree basis:
//! northwest-corner start, potentials from the tree, Bland's rule for both
//! the entering and the leaving variable (deterministic and cycle-free).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::types::{Coupling, CostMatrix, DiscreteDistribution};

/// Cell-count guard for the dense transportation LP.
pub const EXACT_CELL_LIMIT: u128 = 1_000_000;

/// Solves the balanced transportation LP to optimality.
///
/// Both inputs must be probability distributions; the returned coupling is
/// feasible to 1e-9, carries dual potentials satisfying complementary
/// slackness, and `objective` is the minimal transport cost.
pub fn solve_exact(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    c: &CostMatrix,
) -> Result<Coupling> {
    c.check_dims(p, q)?;
    for (dist, side) in [(p, "source"), (q, "target")] {
        if !dist.is_probability() {
            return Err(Error::InvalidWeights(format!(
                "solve_exact requires probability distributions; {side} weights sum to {} \
                 (construct with DiscreteDistribution::probability)",
                dist.total_mass()
            )));
        }
    }

    let rows = p.support_indices();
    let cols = q.support_indices();
    let (n, m) = (rows.len(), cols.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("distribution with no positive atoms"));
    }
    if (n as u128) * (m as u128) > EXACT_CELL_LIMIT {
        return Err(Error::SizeGuard {
            context: "transportation LP",
            size: (n as u128) * (m as u128),
            limit: EXACT_CELL_LIMIT,
        });
    }

    let a: Vec<f64> = rows.iter().map(|&i| p.weights()[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| q.weights()[j]).collect();
    let cost = {
        let mut sub = Array2::zeros((n, m));
        for (ii, &i) in rows.iter().enumerate() {
            for (jj, &j) in cols.iter().enumerate() {
                sub[[ii, jj]] = c.entries()[[i, j]];
            }
        }
        sub
    };

    let solved = transportation_simplex(&a, &b, &cost)?;

    // reinsert dropped zero-weight atoms as zero rows/columns
    let (full_n, full_m) = (p.len(), q.len());
    let mut mass = Array2::zeros((full_n, full_m));
    for (ii, &i) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            mass[[i, j]] = solved.mass[[ii, jj]];
        }
    }
    let mut u = Array1::from_elem(full_n, f64::INFINITY);
    let mut v = Array1::from_elem(full_m, f64::INFINITY);
    for (jj, &j) in cols.iter().enumerate() {
        v[j] = solved.v[jj];
    }
    for (ii, &i) in rows.iter().enumerate() {
        u[i] = solved.u[ii];
    }
    // potentials for dropped atoms: tightest feasible values
    for i in 0..full_n {
        if u[i].is_infinite() {
            u[i] = (0..full_m)
                .filter(|&j| v[j].is_finite())
                .map(|j| c.entries()[[i, j]] - v[j])
                .fold(f64::INFINITY, f64::min);
        }
    }
    for j in 0..full_m {
        if v[j].is_infinite() {
            v[j] = (0..full_n)
                .map(|i| c.entries()[[i, j]] - u[i])
                .fold(f64::INFINITY, f64::min);
        }
    }

    let coupling = Coupling::from_mass(
        mass,
        c.entries(),
        p.weights(),
        q.weights(),
        Some((u, v)),
    );
    assert!(
        coupling.row_marginal_error <= 1e-9 && coupling.col_marginal_error <= 1e-9,
        "transportation simplex produced an infeasible plan (row err {:e}, col err {:e})",
        coupling.row_marginal_error,
        coupling.col_marginal_error
    );
    Ok(coupling)
}

struct SimplexResult {
    mass: Array2<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

fn transportation_simplex(a: &[f64], b: &[f64], cost: &Array2<f64>) -> Result<SimplexResult> {
    let (n, m) = (a.len(), b.len());
    let scale = 1.0 + cost.iter().copied().fold(0.0, f64::max).abs();
    let enter_tol = 1e-11 * scale;

    // northwest-corner initial basis: exactly n + m - 1 cells
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(n + m - 1);
    let mut flow: Vec<f64> = Vec::with_capacity(n + m - 1);
    {
        let (mut i, mut j) = (0usize, 0usize);
        let mut ra = a[0];
        let mut rb = b[0];
        loop {
            let t = ra.min(rb).max(0.0);
            basis.push((i, j));
            flow.push(t);
            ra -= t;
            rb -= t;
            match (i + 1 == n, j + 1 == m) {
                (true, true) => break,
                (false, true) => {
                    i += 1;
                    ra = a[i];
                }
                (true, false) => {
                    j += 1;
                    rb = b[j];
                }
                (false, false) => {
                    if ra <= rb {
                        i += 1;
                        ra = a[i];
                    } else {
                        j += 1;
                        rb = b[j];
                    }
                }
            }
        }
    }
    debug_assert_eq!(basis.len(), n + m - 1);

    let max_pivots = 2000 + 200 * (n + m) * (n + m);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];

    for _pivot in 0..max_pivots {
        compute_potentials(&basis, cost, &mut u, &mut v, n, m);

        // Bland: entering cell is the first (row-major) with negative reduced cost
        let mut entering: Option<(usize, usize)> = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if cost[[i, j]] - u[i] - v[j] < -enter_tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            // optimal: assemble plan
            let mut mass = Array2::zeros((n, m));
            for (k, &(i, j)) in basis.iter().enumerate() {
                mass[[i, j]] = flow[k].max(0.0);
            }
            return Ok(SimplexResult { mass, u, v });
        };

        // cycle: path from column node ej back to row node ei in the basis tree
        let path = tree_path(&basis, n, m, n + ej, ei);
        // signs alternate along the cycle; edges incident to the entering
        // cell's column come first and carry -theta
        let mut minus_edges: Vec<usize> = Vec::new();
        let mut plus_edges: Vec<usize> = Vec::new();
        for (pos, &edge_idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                minus_edges.push(edge_idx);
            } else {
                plus_edges.push(edge_idx);
            }
        }

        let theta = minus_edges
            .iter()
            .map(|&k| flow[k])
            .fold(f64::INFINITY, f64::min);
        // Bland: smallest (i, j) among the minimizers leaves the basis
        let leaving = *minus_edges
            .iter()
            .filter(|&&k| flow[k] <= theta)
            .min_by_key(|&&k| basis[k])
            .expect("cycle has at least one minus edge");

        for &k in &minus_edges {
            flow[k] -= theta;
        }
        for &k in &plus_edges {
            flow[k] += theta;
        }
        basis[leaving] = (ei, ej);
        flow[leaving] = theta;
    }

    Err(Error::InvalidParameter {
        name: "max_pivots",
        reason: "transportation simplex exceeded its pivot budget".into(),
    })
}

/// Solves `u_i + v_j = c_ij` over the basis tree with `u_0 = 0`.
fn compute_potentials(
    basis: &[(usize, usize)],
    cost: &Array2<f64>,
    u: &mut [f64],
    v: &mut [f64],
    n: usize,
    m: usize,
) {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + m];
    for (k, &(i, j)) in basis.iter().enumerate() {
        adj[i].push((n + j, k));
        adj[n + j].push((i, k));
    }
    let mut seen = vec![false; n + m];
    let mut stack = vec![0usize];
    u[0] = 0.0;
    seen[0] = true;
    while let Some(node) = stack.pop() {
        for &(next, k) in &adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            let (i, j) = basis[k];
            if next >= n {
                v[next - n] = cost[[i, j]] - u[i];
            } else {
                u[next] = cost[[i, j]] - v[j];
            }
            stack.push(next);
        }
    }
}

/// Edge indices along the unique tree path from `start` to `goal`
/// (nodes 0..n are rows, n..n+m are columns).
fn tree_path(basis: &[(usize, usize)], n: usize, m: usize, start: usize, goal: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + m];
    for (k, &(i, j)) in basis.iter().enumerate() {
        adj[i].push((n + j, k));
        adj[n + j].push((i, k));
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + m];
    let mut seen = vec![false; n + m];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    seen[start] = true;
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        for &(next, k) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, k));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = goal;
    while node != start {
        let (prev, k) = parent[node].expect("basis graph is a spanning tree");
        path.push(k);
        node = prev;
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dist_1d(points: &[f64], weights: &[f64]) -> DiscreteDistribution {
        let n = points.len();
        DiscreteDistribution::probability(
            Array2::from_shape_vec((n, 1), points.to_vec()).unwrap(),
            Array1::from_vec(weights.to_vec()),
        )
        .unwrap()
    }

    #[test]
    fn singleton_to_singleton() {
        let p = dist_1d(&[0.0], &[1.0]);
        let q = dist_1d(&[3.0], &[1.0]);
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let plan = solve_exact(&p, &q, &c).unwrap();
        assert!((plan.mass[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((plan.objective - 9.0).abs() < 1e-12);
    }

    #[test]
    fn identical_marginals_have_zero_cost() {
        let p = dist_1d(&[0.0, 1.0], &[0.5, 0.5]);
        let c = CostMatrix::sq_euclidean(&p, &p).unwrap();
        let plan = solve_exact(&p, &p, &c).unwrap();
        assert!(plan.objective.abs() < 1e-12);
        assert!((plan.mass[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((plan.mass[[1, 1]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_point_monotone_plan() {
        // uniform{0,1} -> uniform{1,2}: monotone plan costs 1, the swap costs 2
        let p = dist_1d(&[0.0, 1.0], &[0.5, 0.5]);
        let q = dist_1d(&[1.0, 2.0], &[0.5, 0.5]);
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let plan = solve_exact(&p, &q, &c).unwrap();
        assert!((plan.objective - 1.0).abs() < 1e-12);
        assert!((plan.mass[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((plan.mass[[1, 1]] - 0.5).abs() < 1e-12);
        assert!(plan.mass[[0, 1]].abs() < 1e-12);
    }

    #[test]
    fn duals_certify_optimality() {
        let p = dist_1d(&[0.0, 0.7, 2.0], &[0.2, 0.5, 0.3]);
        let q = dist_1d(&[-1.0, 1.5], &[0.6, 0.4]);
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let plan = solve_exact(&p, &q, &c).unwrap();
        let (u, v) = plan.dual_potentials.as_ref().unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let slack = c.entries()[[i, j]] - u[i] - v[j];
                assert!(slack >= -1e-8, "dual infeasible at ({i},{j}): {slack}");
                if plan.mass[[i, j]] > 1e-12 {
                    assert!(slack.abs() <= 1e-8, "complementary slackness: {slack}");
                }
            }
        }
    }

    #[test]
    fn rejects_unnormalized_input() {
        let pts = array![[0.0], [1.0]];
        let p = DiscreteDistribution::with_masses(pts.clone(), array![0.5, 0.6]).unwrap();
        let q = DiscreteDistribution::uniform(pts).unwrap();
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let err = solve_exact(&p, &q, &c).unwrap_err();
        assert!(err.to_string().contains("probability"));
    }

    #[test]
    fn zero_weight_atoms_get_zero_rows() {
        let pts = array![[0.0], [0.5], [1.0]];
        let p = DiscreteDistribution::probability(pts.clone(), array![0.5, 0.0, 0.5]).unwrap();
        let q = DiscreteDistribution::probability(pts, array![0.0, 1.0, 0.0]).unwrap();
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        let plan = solve_exact(&p, &q, &c).unwrap();
        assert_eq!(plan.mass.nrows(), 3);
        assert!(plan.mass.row(1).iter().all(|&x| x == 0.0));
        assert!(plan.mass.column(0).iter().all(|&x| x == 0.0));
        assert!((plan.mass[[0, 1]] - 0.5).abs() < 1e-12);
    }
}

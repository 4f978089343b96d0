//! Dense two-phase primal simplex for equality-form linear programs.
//!
//! Solves `min c'x  s.t.  A x = b, x >= 0` with Bland's rule throughout, so
//! the solver is deterministic and cannot cycle. Used for the response-type
//! bounds LPs and the CDF-form synthetic-control weight problem; the
//! transportation problem has its own specialized simplex.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Array1<f64>,
    pub objective: f64,
}

const MAX_PIVOTS: usize = 400_000;

pub fn solve_lp(a: &Array2<f64>, b: &Array1<f64>, c: &Array1<f64>) -> Result<LpSolution> {
    let m = a.nrows();
    let n = a.ncols();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "LP rhs length",
            expected: m,
            got: b.len(),
        });
    }
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            context: "LP cost length",
            expected: n,
            got: c.len(),
        });
    }

    let scale = 1.0
        + a.iter()
            .chain(b.iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max);
    let tol = 1e-10 * scale;

    // tableau with artificial columns: [A | I | b], rows sign-fixed so b >= 0
    let total = n + m;
    let mut tab = Array2::<f64>::zeros((m, total + 1));
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            tab[[i, j]] = sign * a[[i, j]];
        }
        tab[[i, n + i]] = 1.0;
        tab[[i, total]] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..total).collect();

    // phase 1: minimize the sum of artificials
    let phase1_cost: Vec<f64> = (0..total).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    let mut pivots = 0usize;
    run_simplex(&mut tab, &mut basis, &phase1_cost, n, tol, &mut pivots)?;
    let infeasibility: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(i, _)| tab[[i, total]])
        .sum();
    if infeasibility > 1e-9 * scale {
        let residual = basis
            .iter()
            .enumerate()
            .filter(|(_, &bv)| bv >= n)
            .map(|(i, _)| tab[[i, total]])
            .fold(0.0, f64::max);
        return Err(Error::LpInfeasible { residual });
    }

    // drive remaining zero-valued artificials out of the basis; rows with no
    // real pivot column are redundant constraints and are dropped
    let mut drop_rows: Vec<usize> = Vec::new();
    for i in 0..m {
        if basis[i] < n {
            continue;
        }
        let mut pivot_col = None;
        for j in 0..n {
            if tab[[i, j]].abs() > tol {
                pivot_col = Some(j);
                break;
            }
        }
        match pivot_col {
            Some(j) => {
                pivot(&mut tab, &mut basis, i, j);
            }
            None => drop_rows.push(i),
        }
    }
    if !drop_rows.is_empty() {
        let keep: Vec<usize> = (0..m).filter(|i| !drop_rows.contains(i)).collect();
        let mut newtab = Array2::<f64>::zeros((keep.len(), total + 1));
        let mut newbasis = Vec::with_capacity(keep.len());
        for (r, &i) in keep.iter().enumerate() {
            newtab.row_mut(r).assign(&tab.row(i));
            newbasis.push(basis[i]);
        }
        tab = newtab;
        basis = newbasis;
    }

    // phase 2 with the real objective (artificials barred from entering)
    let mut phase2_cost = vec![0.0; total];
    phase2_cost[..n].copy_from_slice(c.as_slice().expect("contiguous cost"));
    run_simplex(&mut tab, &mut basis, &phase2_cost, n, tol, &mut pivots)?;

    let rhs_col = total;
    let mut x = Array1::zeros(n);
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab[[i, rhs_col]].max(0.0);
        }
    }
    let objective = c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}

/// Maximizes `c'x` over the same feasible set.
pub fn solve_lp_max(a: &Array2<f64>, b: &Array1<f64>, c: &Array1<f64>) -> Result<LpSolution> {
    let neg = c.mapv(|v| -v);
    let mut sol = solve_lp(a, b, &neg)?;
    sol.objective = -sol.objective;
    Ok(sol)
}

fn run_simplex(
    tab: &mut Array2<f64>,
    basis: &mut [usize],
    cost: &[f64],
    n_real: usize,
    tol: f64,
    pivots: &mut usize,
) -> Result<()> {
    let m = tab.nrows();
    let total = tab.ncols() - 1;
    loop {
        // reduced costs r_j = c_j - c_B' T_j; Bland: first negative enters
        let mut entering = None;
        for j in 0..total {
            // artificials may re-enter only while they are being minimized
            if j >= n_real && cost[j] == 0.0 {
                continue;
            }
            let mut r = cost[j];
            for i in 0..m {
                let t = tab[[i, j]];
                if t != 0.0 {
                    r -= cost[basis[i]] * t;
                }
            }
            if r < -tol {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(());
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let t = tab[[i, j]];
            if t > tol {
                let ratio = tab[[i, total]] / t;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        // Bland tie-break: smallest basis variable index
                        if ratio < lr - 1e-15 * (1.0 + lr.abs())
                            || (ratio <= lr + 1e-15 * (1.0 + lr.abs()) && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio.min(lr)));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::LpUnbounded);
        };

        pivot(tab, basis, row, j);
        *pivots += 1;
        if *pivots > MAX_PIVOTS {
            return Err(Error::InvalidParameter {
                name: "max_pivots",
                reason: "simplex exceeded its pivot budget".into(),
            });
        }
    }
}

fn pivot(tab: &mut Array2<f64>, basis: &mut [usize], row: usize, col: usize) {
    let m = tab.nrows();
    let width = tab.ncols();
    let p = tab[[row, col]];
    for j in 0..width {
        tab[[row, j]] /= p;
    }
    tab[[row, col]] = 1.0;
    for i in 0..m {
        if i == row {
            continue;
        }
        let factor = tab[[i, col]];
        if factor == 0.0 {
            continue;
        }
        for j in 0..width {
            tab[[i, j]] -= factor * tab[[row, j]];
        }
        tab[[i, col]] = 0.0;
    }
    basis[row] = col;
}

//! Small dense linear-algebra helpers.
//!
//! The solvers here stay deliberately simple: every system in this crate is
//! tiny (regression designs, pivot steps, 2x2 oracles), so partial-pivot
//! Gaussian elimination is all that is needed.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "solve: square matrix",
            expected: n,
            got: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve: rhs length",
            expected: n,
            got: b.len(),
        });
    }

    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[[col, col]].abs();
        for row in (col + 1)..n {
            let v = m[[row, col]].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-13 {
            return Err(Error::RankDeficient(format!(
                "pivot {best:e} at column {col}"
            )));
        }
        if pivot != col {
            for j in 0..n {
                m.swap([col, j], [pivot, j]);
            }
            rhs.swap(col, pivot);
        }
        let diag = m[[col, col]];
        for row in (col + 1)..n {
            let factor = m[[row, col]] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[[row, j]] -= factor * m[[col, j]];
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m[[row, j]] * x[j];
        }
        x[row] = acc / m[[row, row]];
    }
    Ok(x)
}

/// Solves the symmetric positive definite system `A x = b` via Cholesky.
///
/// Falls back on an error if `A` is not positive definite to working
/// precision; callers add damping when that matters.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::RankDeficient(format!(
                        "Cholesky pivot {sum:e} at row {i}"
                    )));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    // forward then backward substitution
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[[i, k]] * y[k];
        }
        y[i] = acc / l[[i, i]];
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l[[k, i]] * x[k];
        }
        x[i] = acc / l[[i, i]];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solve_recovers_known_solution() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let x_true = array![1.0, -2.0];
        let b = a.dot(&x_true);
        let x = solve(&a, &b).unwrap();
        assert!((&x - &x_true).iter().all(|d| d.abs() < 1e-12));
        let x2 = solve_spd(&a, &b).unwrap();
        assert!((&x2 - &x_true).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn solve_rejects_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let b = array![1.0, 2.0];
        assert!(matches!(solve(&a, &b), Err(Error::RankDeficient(_))));
    }
}

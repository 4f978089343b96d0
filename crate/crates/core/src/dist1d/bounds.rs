//! Frechet-Hoeffding bounds on a joint CDF with fixed marginals, and the
//! induced expectation bounds for quasi-antitone cost functions.

use crate::error::{Error, Result};

use super::cdf::Cdf;

pub const DEFAULT_QUADRATURE_POINTS: usize = 1024;

/// Pointwise Frechet-Hoeffding bounds on `P(Y0 <= y0, Y1 <= y1)`:
/// `max(F0(y0) + F1(y1) - 1, 0) <= H(y0, y1) <= min(F0(y0), F1(y1))`.
pub fn frechet_cdf_bounds(f0: &Cdf, f1: &Cdf, y0: f64, y1: f64) -> (f64, f64) {
    let a = f0.eval(y0);
    let b = f1.eval(y1);
    let lower = (a + b - 1.0).max(0.0);
    let upper = a.min(b);
    (lower, upper)
}

/// Bounds on `E[c(Y0, Y1)]` over all couplings of the two marginals, for a
/// quasi-antitone cost: the comonotone coupling attains the lower bound and
/// the antimonotone coupling the upper bound.
///
/// The cost is spot-checked for quasi-antitonicity on a quantile grid and the
/// call is rejected with the violating quadruple if the check fails.
pub fn expectation_bounds<C: Fn(f64, f64) -> f64>(
    f0: &Cdf,
    f1: &Cdf,
    cost: C,
) -> Result<(f64, f64)> {
    expectation_bounds_with(f0, f1, cost, DEFAULT_QUADRATURE_POINTS)
}

/// [`expectation_bounds`] with an explicit quadrature resolution.
pub fn expectation_bounds_with<C: Fn(f64, f64) -> f64>(
    f0: &Cdf,
    f1: &Cdf,
    cost: C,
    points: usize,
) -> Result<(f64, f64)> {
    if points == 0 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "quadrature needs at least one node".into(),
        });
    }
    spot_check_quasi_antitone(f0, f1, &cost)?;

    // Midpoint rule on a uniform grid over (0,1); interior nodes keep the
    // quantile compositions finite for unbounded supports.
    let n = points as f64;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for k in 0..points {
        let u = (k as f64 + 0.5) / n;
        let x = f0.quantile(u);
        lower += cost(x, f1.quantile(u));
        upper += cost(x, f1.quantile(1.0 - u));
    }
    Ok((lower / n, upper / n))
}

fn spot_check_quasi_antitone<C: Fn(f64, f64) -> f64>(f0: &Cdf, f1: &Cdf, cost: &C) -> Result<()> {
    const LEVELS: [f64; 7] = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];
    let xs: Vec<f64> = LEVELS.iter().map(|&q| f0.quantile(q)).collect();
    let ys: Vec<f64> = LEVELS.iter().map(|&q| f1.quantile(q)).collect();
    for i in 0..xs.len() {
        for i2 in (i + 1)..xs.len() {
            for j in 0..ys.len() {
                for j2 in (j + 1)..ys.len() {
                    let (x0, x1) = (xs[i], xs[i2]);
                    let (y0, y1) = (ys[j], ys[j2]);
                    if x1 <= x0 || y1 <= y0 {
                        continue;
                    }
                    let lhs = cost(x1, y1) + cost(x0, y0);
                    let rhs = cost(x1, y0) + cost(x0, y1);
                    let scale = 1.0 + lhs.abs().max(rhs.abs());
                    if lhs > rhs + 1e-9 * scale {
                        return Err(Error::NotQuasiAntitone { x0, y0, x1, y1 });
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist1d::{ecdf, Interpolation};

    fn uniform_cdf() -> Cdf {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
        Cdf::from_fn(grid, |x| x, Interpolation::Linear).unwrap()
    }

    #[test]
    fn frechet_bounds_uniform_midpoint() {
        let f = uniform_cdf();
        let (lo, hi) = frechet_cdf_bounds(&f, &f, 0.5, 0.5);
        assert!((lo - 0.0).abs() < 1e-12);
        assert!((hi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn frechet_bounds_collapse_in_the_marginal_limit() {
        let f = uniform_cdf();
        for y1 in [0.2, 0.5, 0.9] {
            let (lo, hi) = frechet_cdf_bounds(&f, &f, 1e6, y1);
            assert!((lo - f.eval(y1)).abs() < 1e-12);
            assert!((hi - f.eval(y1)).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_coupling_lies_inside_frechet_bounds() {
        let f0 = uniform_cdf();
        let f1 = ecdf(&(0..50).map(|i| (i as f64).sin()).collect::<Vec<_>>()).unwrap();
        for i in 1..10 {
            for j in 1..10 {
                let y0 = i as f64 / 10.0;
                let y1 = -1.0 + 2.0 * j as f64 / 10.0;
                let (lo, hi) = frechet_cdf_bounds(&f0, &f1, y0, y1);
                let indep = f0.eval(y0) * f1.eval(y1);
                assert!(lo <= indep + 1e-12 && indep <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn squared_cost_two_point_bounds() {
        // Y0 = Y1 = uniform{0,1}: comonotone cost 0, antimonotone cost 1
        let f = ecdf(&[0.0, 1.0]).unwrap();
        let (lo, hi) = expectation_bounds(&f, &f, |x, y| (x - y) * (x - y)).unwrap();
        assert!(lo.abs() < 1e-9, "lower {lo}");
        assert!((hi - 1.0).abs() < 2e-3, "upper {hi}");
    }

    #[test]
    fn squared_cost_self_coupling_lower_bound_zero() {
        let sample: Vec<f64> = (0..37).map(|i| ((i * 7919) % 97) as f64 / 9.0).collect();
        let f = ecdf(&sample).unwrap();
        let (lo, _) = expectation_bounds(&f, &f, |x, y| (x - y) * (x - y)).unwrap();
        assert!(lo.abs() < 1e-12, "lower {lo}");
    }

    #[test]
    fn product_cost_uniform_closed_form() {
        // c(x,y) = -xy on U[0,1]: lower -1/3, upper -1/6
        let f = uniform_cdf();
        let (lo, hi) = expectation_bounds(&f, &f, |x, y| -x * y).unwrap();
        assert!((lo + 1.0 / 3.0).abs() < 1e-3, "lower {lo}");
        assert!((hi + 1.0 / 6.0).abs() < 1e-3, "upper {hi}");
    }

    #[test]
    fn rejects_non_quasi_antitone_cost() {
        let f = uniform_cdf();
        // c(x,y) = xy is supermodular, not quasi-antitone
        let err = expectation_bounds(&f, &f, |x, y| x * y);
        assert!(matches!(err, Err(Error::NotQuasiAntitone { .. })));
    }
}

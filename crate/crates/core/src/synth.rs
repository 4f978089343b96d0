//! Classic and distributional synthetic controls.
//!
//! Weight solves are simplex-constrained least squares (accelerated
//! projected gradient with an exact simplex projection and a minimal-norm
//! tie-break) except for the CDF variant, which reduces to a linear program
//! on the evaluation grid.

use ndarray::{Array1, Array2};

use crate::dist1d::{Cdf, QuantileFunction};
use crate::error::{Error, Result};
use crate::ot::simplex::solve_lp;

/// Default quantile grid for distributional weights: 999 equispaced levels.
pub fn default_q_grid() -> Vec<f64> {
    (1..1000).map(|k| k as f64 / 1000.0).collect()
}

/// Default outcome grid: `points` values spanning the pooled supports with
/// 5% padding.
pub fn default_y_grid(cdfs: &[&Cdf], points: usize) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for cdf in cdfs {
        let (a, b) = cdf.support_range();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let pad = 0.05 * (hi - lo).max(1e-12);
    let (lo, hi) = (lo - pad, hi + pad);
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Weights on the probability simplex with the achieved fit.
#[derive(Debug, Clone)]
pub struct SimplexWeights {
    pub lambda: Vec<f64>,
    /// Objective value at the optimum (weighted distance or integral).
    pub distance: f64,
}

impl SimplexWeights {
    fn checked(lambda: Vec<f64>, distance: f64) -> Self {
        let w = Self {
            lambda: project_to_simplex(&lambda),
            distance,
        };
        debug_assert!((w.lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        w
    }
}

/// First-stage classic synthetic control: minimizes the `v`-weighted
/// Euclidean distance between the treated covariate column and a convex
/// combination of the control columns.
///
/// `x` is `K x (J+1)` with column 0 the treated unit.
pub fn sc_weights(x: &Array2<f64>, v: &[f64]) -> Result<SimplexWeights> {
    let k = x.nrows();
    if x.ncols() < 2 {
        return Err(Error::EmptyInput("synthetic control needs at least one control column"));
    }
    if v.len() != k {
        return Err(Error::DimensionMismatch {
            context: "covariate weights",
            expected: k,
            got: v.len(),
        });
    }
    if v.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidWeights(
            "covariate weights must be nonnegative".into(),
        ));
    }
    if v.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidWeights(
            "covariate weights are all zero".into(),
        ));
    }

    let j = x.ncols() - 1;
    let mut m = Array2::zeros((k, j));
    let mut t = Array1::zeros(k);
    for r in 0..k {
        t[r] = x[[r, 0]];
        for c in 0..j {
            m[[r, c]] = x[[r, c + 1]];
        }
    }
    let (lambda, sse) = simplex_least_squares(&m, &t, v)?;
    Ok(SimplexWeights::checked(lambda, sse.max(0.0).sqrt()))
}

/// Distributional synthetic-control weights in quantile form: least squares
/// of quantile functions on `q_grid` over the simplex.
pub fn dsc_weights_quantile(
    target: &QuantileFunction,
    controls: &[QuantileFunction],
    q_grid: &[f64],
) -> Result<SimplexWeights> {
    if controls.is_empty() {
        return Err(Error::EmptyInput("distributional synthetic controls"));
    }
    if q_grid.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "q_grid",
            reason: "need at least two quantile levels".into(),
        });
    }
    let g = q_grid.len();
    let j = controls.len();
    let mut m = Array2::zeros((g, j));
    let mut t = Array1::zeros(g);
    for (r, &q) in q_grid.iter().enumerate() {
        t[r] = target.eval(q);
        for (c, ctrl) in controls.iter().enumerate() {
            m[[r, c]] = ctrl.eval(q);
        }
    }
    let w = trapezoid_weights(q_grid);
    let (lambda, integral) = simplex_least_squares(&m, &t, &w)?;
    Ok(SimplexWeights::checked(lambda, integral.max(0.0)))
}

/// Distributional synthetic-control weights in CDF form: the 1-Wasserstein
/// objective `integral |sum_j lambda_j F_j - F_0| dy` discretized on
/// `y_grid` and solved as a linear program.
pub fn dsc_weights_cdf(target: &Cdf, controls: &[Cdf], y_grid: &[f64]) -> Result<SimplexWeights> {
    if controls.is_empty() {
        return Err(Error::EmptyInput("distributional synthetic controls"));
    }
    if y_grid.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "y_grid",
            reason: "need at least two grid points".into(),
        });
    }
    // the grid must cover every support, otherwise mass differences outside
    // the grid are invisible to the objective
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for cdf in std::iter::once(target).chain(controls.iter()) {
        let (a, b) = cdf.support_range();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if y_grid[0] > lo || *y_grid.last().unwrap() < hi {
        return Err(Error::GridMismatch(format!(
            "y_grid [{}, {}] does not cover the pooled supports; required range [{lo}, {hi}]",
            y_grid[0],
            y_grid.last().unwrap()
        )));
    }

    let g = y_grid.len();
    let j = controls.len();
    let widths = trapezoid_weights(y_grid);

    // variables: lambda (J), then positive/negative residual parts (G each)
    let n_vars = j + 2 * g;
    let mut a = Array2::zeros((g + 1, n_vars));
    let mut b = Array1::zeros(g + 1);
    let mut c = Array1::zeros(n_vars);
    for (r, &y) in y_grid.iter().enumerate() {
        for (col, ctrl) in controls.iter().enumerate() {
            a[[r, col]] = ctrl.eval(y);
        }
        a[[r, j + r]] = -1.0;
        a[[r, j + g + r]] = 1.0;
        b[r] = target.eval(y);
        c[j + r] = widths[r];
        c[j + g + r] = widths[r];
    }
    for col in 0..j {
        a[[g, col]] = 1.0;
    }
    b[g] = 1.0;

    let sol = solve_lp(&a, &b, &c)?;
    let lambda: Vec<f64> = sol.x.iter().take(j).copied().collect();
    Ok(SimplexWeights::checked(lambda, sol.objective.max(0.0)))
}

/// Aggregates per-period weights with time weights on the simplex
/// (uniform when `time_weights` is `None`).
pub fn aggregate_weights(
    per_period: &[SimplexWeights],
    time_weights: Option<&[f64]>,
) -> Result<SimplexWeights> {
    if per_period.is_empty() {
        return Err(Error::EmptyInput("per-period weight list"));
    }
    let j = per_period[0].lambda.len();
    if per_period.iter().any(|w| w.lambda.len() != j) {
        return Err(Error::DimensionMismatch {
            context: "per-period weight lengths",
            expected: j,
            got: per_period.iter().map(|w| w.lambda.len()).max().unwrap(),
        });
    }
    let omega: Vec<f64> = match time_weights {
        Some(w) => {
            if w.len() != per_period.len() {
                return Err(Error::DimensionMismatch {
                    context: "time weights",
                    expected: per_period.len(),
                    got: w.len(),
                });
            }
            if w.iter().any(|&x| !(x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidWeights(
                    "time weights must be nonnegative with positive sum".into(),
                ));
            }
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        }
        None => vec![1.0 / per_period.len() as f64; per_period.len()],
    };
    let mut lambda = vec![0.0; j];
    let mut distance = 0.0;
    for (w, om) in per_period.iter().zip(omega.iter()) {
        for (l, li) in lambda.iter_mut().zip(w.lambda.iter()) {
            *l += om * li;
        }
        distance += om * w.distance;
    }
    Ok(SimplexWeights::checked(lambda, distance))
}

/// Counterfactual quantile function and distributional effects for the
/// post-treatment period.
#[derive(Debug, Clone)]
pub struct DscCounterfactual {
    pub counterfactual: QuantileFunction,
    /// Observed-minus-counterfactual quantile difference per grid level.
    pub effects: Vec<f64>,
    /// Integral of the effect curve over the quantile grid.
    pub mean_effect: f64,
}

/// Builds the counterfactual quantile function `sum_j lambda_j F_j^{-1}` and
/// compares it with the observed treated quantile function.
pub fn dsc_counterfactual(
    weights: &SimplexWeights,
    controls_post: &[QuantileFunction],
    observed_post: &QuantileFunction,
    q_grid: &[f64],
) -> Result<DscCounterfactual> {
    if controls_post.len() != weights.lambda.len() {
        return Err(Error::DimensionMismatch {
            context: "post-period controls vs weights",
            expected: weights.lambda.len(),
            got: controls_post.len(),
        });
    }
    if q_grid.len() < 2 {
        return Err(Error::GridMismatch(
            "counterfactual quantile grid needs at least two levels".into(),
        ));
    }
    let values: Vec<f64> = q_grid
        .iter()
        .map(|&q| {
            weights
                .lambda
                .iter()
                .zip(controls_post.iter())
                .map(|(&l, f)| l * f.eval(q))
                .sum()
        })
        .collect();
    let counterfactual = QuantileFunction::new(q_grid.to_vec(), values)?;
    let effects: Vec<f64> = q_grid
        .iter()
        .zip(counterfactual.values())
        .map(|(&q, &cf)| observed_post.eval(q) - cf)
        .collect();
    let w = trapezoid_weights(q_grid);
    let total_w: f64 = w.iter().sum();
    let mean_effect = effects
        .iter()
        .zip(w.iter())
        .map(|(e, wi)| e * wi)
        .sum::<f64>()
        / total_w;
    Ok(DscCounterfactual {
        counterfactual,
        effects,
        mean_effect,
    })
}

/// Minimizes `||M lambda - t||^2_w` over the simplex by accelerated
/// projected gradient with a tiny ridge for a minimal-norm tie-break.
/// Returns the weights and the weighted squared residual.
fn simplex_least_squares(m: &Array2<f64>, t: &Array1<f64>, w: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (rows, j) = m.dim();
    if t.len() != rows || w.len() != rows {
        return Err(Error::DimensionMismatch {
            context: "least-squares rows",
            expected: rows,
            got: t.len().min(w.len()),
        });
    }

    // gram = M' W M, lin = M' W t
    let mut gram = Array2::zeros((j, j));
    let mut lin = Array1::zeros(j);
    let mut const_term = 0.0;
    for r in 0..rows {
        let wr = w[r];
        if wr == 0.0 {
            continue;
        }
        const_term += wr * t[r] * t[r];
        for a in 0..j {
            lin[a] += wr * m[[r, a]] * t[r];
            for b in a..j {
                gram[[a, b]] += wr * m[[r, a]] * m[[r, b]];
            }
        }
    }
    for a in 0..j {
        for b in 0..a {
            gram[[a, b]] = gram[[b, a]];
        }
    }
    let ridge = 1e-12 * (1.0 + gram.diag().iter().copied().fold(0.0, f64::max));
    for a in 0..j {
        gram[[a, a]] += ridge;
    }

    // Lipschitz constant via power iteration
    let mut vec = Array1::from_elem(j, 1.0 / (j as f64).sqrt());
    let mut lip = 1.0;
    for _ in 0..200 {
        let next = gram.dot(&vec);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            break;
        }
        lip = norm;
        vec = next.mapv(|x| x / norm);
    }
    let step = 1.0 / (2.0 * lip.max(1e-300));

    let mut lambda = vec![1.0 / j as f64; j];
    let mut prev = lambda.clone();
    let mut momentum = 1.0_f64;
    for _ in 0..50_000 {
        let beta = {
            let next_m = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let b = (momentum - 1.0) / next_m;
            momentum = next_m;
            b
        };
        let extrap: Vec<f64> = lambda
            .iter()
            .zip(prev.iter())
            .map(|(l, p)| l + beta * (l - p))
            .collect();
        let grad = {
            let lam = Array1::from_vec(extrap.clone());
            let g = gram.dot(&lam) - &lin;
            g.mapv(|x| 2.0 * x)
        };
        let candidate: Vec<f64> = extrap
            .iter()
            .zip(grad.iter())
            .map(|(x, g)| x - step * g)
            .collect();
        let projected = project_to_simplex(&candidate);
        let delta = projected
            .iter()
            .zip(lambda.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev = std::mem::replace(&mut lambda, projected);
        if delta <= 1e-14 {
            break;
        }
    }

    let lam = Array1::from_vec(lambda.clone());
    let sse = const_term - 2.0 * lin.dot(&lam) + lam.dot(&gram.dot(&lam));
    Ok((lambda, sse.max(0.0)))
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut k = 0;
    for (i, &val) in sorted.iter().enumerate() {
        cumsum += val;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if val - candidate > 0.0 {
            theta = candidate;
            k = i + 1;
        }
    }
    let _ = k;
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // exact renormalization against floating drift
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        for x in out.iter_mut() {
            *x /= s;
        }
    } else {
        out = vec![1.0 / n as f64; n];
    }
    out
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
        let right = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
        w[i] = 0.5 * (left + right);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist1d::Interpolation;
    use ndarray::array;

    fn qf_from_fn<F: Fn(f64) -> f64>(f: F) -> QuantileFunction {
        let grid = default_q_grid();
        let values = grid.iter().map(|&q| f(q)).collect();
        QuantileFunction::new(grid, values).unwrap()
    }

    #[test]
    fn exact_covariate_match_gets_unit_weight() {
        // treated column equals control 1
        let x = array![[1.0, 1.0, 4.0], [2.0, 2.0, -1.0], [0.5, 0.5, 3.0]];
        let w = sc_weights(&x, &[1.0, 1.0, 1.0]).unwrap();
        assert!((w.lambda[0] - 1.0).abs() < 1e-6, "{:?}", w.lambda);
        assert!(w.distance < 1e-6);
    }

    #[test]
    fn midpoint_treated_splits_weights_evenly() {
        let x = array![[1.0, 0.0, 2.0]];
        let w = sc_weights(&x, &[1.0]).unwrap();
        assert!((w.lambda[0] - 0.5).abs() < 1e-6, "{:?}", w.lambda);
        assert!((w.lambda[1] - 0.5).abs() < 1e-6);
        assert!(w.distance < 1e-9);
    }

    #[test]
    fn outside_hull_lands_on_face_with_hull_distance() {
        // 2-D controls at (0,0) and (1,0); treated at (2,1): nearest hull
        // point is (1,0), distance sqrt(2)
        let x = array![[2.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        let w = sc_weights(&x, &[1.0, 1.0]).unwrap();
        assert!((w.lambda[1] - 1.0).abs() < 1e-6, "{:?}", w.lambda);
        // dense enumeration oracle over the 1-simplex
        let mut best = f64::INFINITY;
        for k in 0..=10_000 {
            let l = k as f64 / 10_000.0;
            let dx = 2.0 - l;
            let dy = 1.0;
            best = best.min((dx * dx + dy * dy).sqrt());
        }
        assert!((w.distance - best).abs() < 1e-6, "{} vs {best}", w.distance);
    }

    #[test]
    fn quantile_weights_recover_affine_combination() {
        // controls q and q+1, target q+0.5
        let c1 = qf_from_fn(|q| q);
        let c2 = qf_from_fn(|q| q + 1.0);
        let target = qf_from_fn(|q| q + 0.5);
        let w = dsc_weights_quantile(&target, &[c1, c2], &default_q_grid()).unwrap();
        assert!((w.lambda[0] - 0.5).abs() < 1e-6, "{:?}", w.lambda);
        assert!(w.distance < 1e-10);
    }

    #[test]
    fn gaussian_quantile_mixture_weights() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n0 = Normal::new(0.0, 1.0).unwrap();
        let n4 = Normal::new(4.0, 1.0).unwrap();
        let n2 = Normal::new(2.0, 1.0).unwrap();
        let c1 = qf_from_fn(|q| n0.inverse_cdf(q));
        let c2 = qf_from_fn(|q| n4.inverse_cdf(q));
        let target = qf_from_fn(|q| n2.inverse_cdf(q));
        let w = dsc_weights_quantile(&target, &[c1, c2], &default_q_grid()).unwrap();
        assert!((w.lambda[0] - 0.5).abs() < 1e-4, "{:?}", w.lambda);
    }

    #[test]
    fn target_equal_to_one_control_selects_it() {
        let c1 = qf_from_fn(|q| q);
        let c2 = qf_from_fn(|q| 2.0 * q + 1.0);
        let c3 = qf_from_fn(|q| q * q);
        let w = dsc_weights_quantile(&c2.clone(), &[c1, c2, c3], &default_q_grid()).unwrap();
        assert!((w.lambda[1] - 1.0).abs() < 1e-5, "{:?}", w.lambda);
    }

    fn linear_cdf(lo: f64, hi: f64) -> Cdf {
        let grid: Vec<f64> = (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .collect();
        Cdf::from_fn(grid, |y| ((y - lo) / (hi - lo)).clamp(0.0, 1.0), Interpolation::Linear)
            .unwrap()
    }

    #[test]
    fn cdf_weights_recover_mixture() {
        let f1 = linear_cdf(0.0, 1.0);
        let f2 = linear_cdf(0.5, 2.0);
        let f3 = linear_cdf(-1.0, 0.5);
        let grid = default_y_grid(&[&f1, &f2, &f3], 200);
        let target_vals: Vec<f64> = grid
            .iter()
            .map(|&y| 0.2 * f1.eval(y) + 0.3 * f2.eval(y) + 0.5 * f3.eval(y))
            .collect();
        let target = Cdf::new(grid.clone(), target_vals, Interpolation::Linear).unwrap();
        let w = dsc_weights_cdf(&target, &[f1, f2, f3], &grid).unwrap();
        assert!((w.lambda[0] - 0.2).abs() < 1e-6, "{:?}", w.lambda);
        assert!((w.lambda[1] - 0.3).abs() < 1e-6);
        assert!((w.lambda[2] - 0.5).abs() < 1e-6);
        assert!(w.distance < 1e-9);
    }

    #[test]
    fn cdf_grid_must_cover_supports() {
        let f1 = linear_cdf(0.0, 1.0);
        let f2 = linear_cdf(0.0, 3.0);
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        match dsc_weights_cdf(&f1.clone(), &[f1, f2], &grid) {
            Err(Error::GridMismatch(msg)) => assert!(msg.contains("required range")),
            other => panic!("expected grid mismatch, got {other:?}"),
        }
    }

    #[test]
    fn aggregate_weights_examples() {
        let w1 = SimplexWeights {
            lambda: vec![1.0, 0.0],
            distance: 0.0,
        };
        let w2 = SimplexWeights {
            lambda: vec![0.0, 1.0],
            distance: 0.0,
        };
        let uniform = aggregate_weights(&[w1.clone(), w2.clone()], None).unwrap();
        assert!((uniform.lambda[0] - 0.5).abs() < 1e-12);
        let concentrated = aggregate_weights(&[w1.clone(), w2], Some(&[1.0, 0.0])).unwrap();
        assert_eq!(concentrated.lambda, w1.lambda);
        let same = aggregate_weights(&[w1.clone(), w1.clone()], None).unwrap();
        assert_eq!(same.lambda, w1.lambda);
        assert!(aggregate_weights(&[], None).is_err());
    }

    #[test]
    fn counterfactual_examples() {
        let c1 = qf_from_fn(|q| q);
        let c2 = qf_from_fn(|q| q + 1.0);
        let grid = default_q_grid();
        // unit weight on control 2 reproduces control 2
        let w = SimplexWeights {
            lambda: vec![0.0, 1.0],
            distance: 0.0,
        };
        let obs = qf_from_fn(|q| q + 1.3);
        let cf = dsc_counterfactual(&w, &[c1.clone(), c2.clone()], &obs, &grid).unwrap();
        for (v, e) in cf.counterfactual.values().iter().zip(c2.values()) {
            assert!((v - e).abs() < 1e-12);
        }
        assert!((cf.mean_effect - 0.3).abs() < 1e-9, "{}", cf.mean_effect);

        // identical controls make the counterfactual weight-independent
        let w2 = SimplexWeights {
            lambda: vec![0.7, 0.3],
            distance: 0.0,
        };
        let cf2 = dsc_counterfactual(&w2, &[c2.clone(), c2.clone()], &obs, &grid).unwrap();
        for (v, e) in cf2.counterfactual.values().iter().zip(c2.values()) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_covariate_weights_rejected() {
        let x = array![[1.0, 0.0, 2.0]];
        assert!(sc_weights(&x, &[0.0]).is_err());
    }
}

//! Fixed-point iteration for identification with a binary instrument.
//!
//! Alternating the instrument switch with the quantile ("horizontal") map
//! gives the iteration `x_{k+1} = F_z^{-1}(F_{z'}(x_k))`, which converges to
//! a crossing point of the two conditional CDFs when one exists and escapes
//! the support otherwise.

use crate::dist1d::{Cdf, Interpolation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationDirection {
    /// `x_{k+1} = F_z^{-1}(F_{z'}(x_k))` (quantile levels read under z',
    /// inverted under z).
    ZPrimeToZ,
    /// The swapped composition `x_{k+1} = F_{z'}^{-1}(F_z(x_k))`.
    ZToZPrime,
}

#[derive(Debug, Clone)]
pub struct FixedPointTrajectory {
    pub iterates: Vec<f64>,
    pub converged: bool,
    pub limit: f64,
    /// Whether the limit is a crossing point of the two CDFs
    /// (`|F_z - F_{z'}| <= 10 * tol` there).
    pub at_crossing: bool,
    pub direction: IterationDirection,
    /// The iterates left the common support (no interior fixed point in this
    /// direction); retrying with the opposite direction is advised for
    /// starting points on the other side of the crossing.
    pub exited_support: bool,
    pub advice: Option<IterationDirection>,
    /// The two supports did not coincide; iteration ran on the intersection.
    pub support_truncated: bool,
}

/// Runs the fixed-point iteration from `x0` until the step size drops below
/// `tol` or `max_iter` is reached. Divergence (support exit) is reported on
/// the trajectory, not as an error.
pub fn iv_fixed_point(
    f_z: &Cdf,
    f_zprime: &Cdf,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointTrajectory> {
    for (cdf, name) in [(f_z, "F_z"), (f_zprime, "F_zprime")] {
        if cdf.interpolation() != Interpolation::Step {
            continue;
        }
        return Err(Error::InvalidDistribution(format!(
            "{name} must be continuous (linear interpolation) and strictly increasing"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }

    let (lo_z, hi_z) = f_z.support_range();
    let (lo_p, hi_p) = f_zprime.support_range();
    let lo = lo_z.max(lo_p);
    let hi = hi_z.min(hi_p);
    if !(hi > lo) {
        return Err(Error::SupportViolation(format!(
            "conditional CDF supports do not intersect: [{lo_z}, {hi_z}] vs [{lo_p}, {hi_p}]"
        )));
    }
    let support_truncated = (lo_z - lo_p).abs() > 1e-12 || (hi_z - hi_p).abs() > 1e-12;
    if x0 < lo || x0 > hi {
        return Err(Error::SupportViolation(format!(
            "starting point {x0} lies outside the common support [{lo}, {hi}]"
        )));
    }

    // invertibility range of F_z on the common support
    let q_min = f_z.eval(lo);
    let q_max = f_z.eval(hi);

    let mut iterates = vec![x0];
    let mut x = x0;
    let mut converged = false;
    let mut exited = false;
    for _ in 0..max_iter {
        let q = f_zprime.eval(x);
        if q < q_min || q > q_max {
            exited = true;
            break;
        }
        let next = f_z.quantile(q);
        iterates.push(next);
        let step = (next - x).abs();
        x = next;
        if x <= lo || x >= hi {
            exited = true;
            break;
        }
        if step <= tol {
            converged = true;
            break;
        }
    }

    let limit = x;
    let at_crossing = converged && (f_z.eval(limit) - f_zprime.eval(limit)).abs() <= 10.0 * tol;
    Ok(FixedPointTrajectory {
        iterates,
        converged,
        limit,
        at_crossing,
        direction: IterationDirection::ZPrimeToZ,
        exited_support: exited,
        advice: if exited {
            Some(IterationDirection::ZToZPrime)
        } else {
            None
        },
        support_truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn normal_cdf(mean: f64, sd: f64) -> Cdf {
        let dist = Normal::new(mean, sd).unwrap();
        let grid: Vec<f64> = (0..=20000)
            .map(|i| -8.0 + i as f64 * 16.0 / 20000.0)
            .collect();
        Cdf::from_fn(grid, |x| dist.cdf(x), Interpolation::Linear).unwrap()
    }

    #[test]
    fn variance_pair_contracts_to_zero() {
        // F_z = N(0,1), F_z' = N(0, sqrt(2)): T(x) = x / sqrt(2)
        let f_z = normal_cdf(0.0, 1.0);
        let f_zp = normal_cdf(0.0, std::f64::consts::SQRT_2);
        let traj = iv_fixed_point(&f_z, &f_zp, 2.0, 1e-8, 500).unwrap();
        assert!(traj.converged);
        assert!(traj.limit.abs() < 1e-6, "limit {}", traj.limit);
        assert!(traj.at_crossing);
        // early iterates shrink by ~ 1/sqrt(2)
        let ratio = traj.iterates[1] / traj.iterates[0];
        assert!((ratio - 1.0 / std::f64::consts::SQRT_2).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn equal_cdfs_fix_every_point() {
        let f = normal_cdf(0.0, 1.0);
        for x0 in [-1.5, 0.0, 2.0] {
            let traj = iv_fixed_point(&f, &f, x0, 1e-9, 50).unwrap();
            assert!(traj.converged);
            assert!((traj.limit - x0).abs() < 1e-6, "{} vs {x0}", traj.limit);
        }
    }

    #[test]
    fn location_shift_diverges_with_advice() {
        // F_z = N(0,1), F_z' = N(0.5,1): T(x) = x - 0.5, monotone escape
        let f_z = normal_cdf(0.0, 1.0);
        let f_zp = normal_cdf(0.5, 1.0);
        let traj = iv_fixed_point(&f_z, &f_zp, 0.0, 1e-8, 10_000).unwrap();
        assert!(!traj.converged);
        assert!(traj.exited_support);
        assert_eq!(traj.advice, Some(IterationDirection::ZToZPrime));
    }

    #[test]
    fn step_cdfs_are_rejected() {
        let f_step = crate::dist1d::ecdf(&[0.0, 1.0, 2.0]).unwrap();
        let f = normal_cdf(0.0, 1.0);
        assert!(iv_fixed_point(&f_step, &f, 0.5, 1e-6, 10).is_err());
    }

    #[test]
    fn mismatched_supports_truncate_and_flag() {
        let dist = Normal::new(0.0, 1.0).unwrap();
        let wide: Vec<f64> = (0..=4000).map(|i| -8.0 + i as f64 * 16.0 / 4000.0).collect();
        let narrow: Vec<f64> = (0..=4000).map(|i| -4.0 + i as f64 * 8.0 / 4000.0).collect();
        let f_wide = Cdf::from_fn(wide, |x| dist.cdf(x), Interpolation::Linear).unwrap();
        let f_narrow = Cdf::from_fn(narrow, |x| dist.cdf(x), Interpolation::Linear).unwrap();
        let traj = iv_fixed_point(&f_wide, &f_narrow, 0.5, 1e-8, 100).unwrap();
        assert!(traj.support_truncated);
        assert!(traj.converged);
    }
}

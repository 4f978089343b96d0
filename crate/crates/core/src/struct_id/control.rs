//! Control variables from the first-stage conditional CDF, and the
//! generalized variant that retargets the control's marginal law through a
//! measure-preserving quantile composition.

use crate::dist1d::{Cdf, Interpolation};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ConditioningOptions {
    /// Minimum observations per conditioning level.
    pub min_level_count: usize,
    /// Treat `z` as discrete when it has at most this many distinct values.
    pub max_discrete_levels: usize,
    /// Number of equal-count bins for continuous `z`.
    pub bins: usize,
}

impl Default for ConditioningOptions {
    fn default() -> Self {
        Self {
            min_level_count: 30,
            max_discrete_levels: 10,
            bins: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelDiagnostics {
    /// Representative value (discrete level) or bin lower edge.
    pub level: f64,
    pub count: usize,
    /// True when the level has no within-level variation in `x`.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct ControlVariableResult {
    /// One control value per observation, in input order.
    pub r: Vec<f64>,
    pub levels: Vec<LevelDiagnostics>,
}

/// Estimates the control variable `R_i = F_{X|Z=z_i}(x_i)`.
///
/// The conditional CDF is evaluated with the `rank/(n+1)` plotting position,
/// which keeps downstream quantile compositions finite; per level the output
/// is then approximately uniform on (0,1).
pub fn control_variable(x: &[f64], z: &[f64]) -> Result<ControlVariableResult> {
    control_variable_with(x, z, &ConditioningOptions::default())
}

pub fn control_variable_with(
    x: &[f64],
    z: &[f64],
    opts: &ConditioningOptions,
) -> Result<ControlVariableResult> {
    if x.is_empty() {
        return Err(Error::EmptyInput("control-variable sample"));
    }
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            context: "control-variable x vs z",
            expected: x.len(),
            got: z.len(),
        });
    }

    let groups = condition_groups(z, opts)?;
    let mut r = vec![f64::NAN; x.len()];
    let mut levels = Vec::with_capacity(groups.len());
    let mut degenerate_levels = Vec::new();

    for group in &groups {
        if group.members.len() < opts.min_level_count {
            return Err(Error::SparseLevel {
                level: format!("{}", group.level),
                count: group.members.len(),
                min: opts.min_level_count,
            });
        }
        let xs: Vec<f64> = group.members.iter().map(|&i| x[i]).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let degenerate = lo == hi;
        if degenerate {
            degenerate_levels.push(format!("{}", group.level));
        }

        // R_i = rank(x_i) / (n_level + 1), ties sharing the upper rank
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let denom = (xs.len() + 1) as f64;
        for &idx in &group.members {
            let rank = sorted.partition_point(|&v| v <= x[idx]);
            r[idx] = rank as f64 / denom;
        }
        levels.push(LevelDiagnostics {
            level: group.level,
            count: xs.len(),
            degenerate,
        });
    }

    if !degenerate_levels.is_empty() {
        return Err(Error::DegenerateControl {
            levels: degenerate_levels.join(", "),
        });
    }
    Ok(ControlVariableResult { r, levels })
}

/// Generalized control variable: `R_i = T(F_{X|Z=z_i}(x_i))` with
/// `T = target^{-1}` a measure-preserving isomorphism from U(0,1), so the
/// marginal law of `R` matches `target`.
pub fn generalized_control_variable(
    x: &[f64],
    z: &[f64],
    target: &Cdf,
) -> Result<ControlVariableResult> {
    generalized_control_variable_with(x, z, target, &ConditioningOptions::default())
}

pub fn generalized_control_variable_with(
    x: &[f64],
    z: &[f64],
    target: &Cdf,
    opts: &ConditioningOptions,
) -> Result<ControlVariableResult> {
    check_invertible(target)?;
    let mut base = control_variable_with(x, z, opts)?;
    if is_identity_target(target) {
        // identity composition applied exactly: reduces to the baseline
        return Ok(base);
    }
    for v in base.r.iter_mut() {
        *v = target.quantile(*v);
    }
    Ok(base)
}

fn check_invertible(target: &Cdf) -> Result<()> {
    if target.interpolation() != Interpolation::Linear {
        return Err(Error::InvalidDistribution(
            "generalized control variable needs a continuous (linear) target CDF".into(),
        ));
    }
    for w in target.values().windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidDistribution(format!(
                "target CDF is not strictly increasing ({} -> {}); not invertible",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn is_identity_target(target: &Cdf) -> bool {
    target
        .grid()
        .iter()
        .zip(target.values().iter())
        .all(|(g, v)| g == v)
}

struct Group {
    level: f64,
    members: Vec<usize>,
}

fn condition_groups(z: &[f64], opts: &ConditioningOptions) -> Result<Vec<Group>> {
    let mut distinct: Vec<f64> = z.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();

    if distinct.len() <= opts.max_discrete_levels {
        let groups = distinct
            .iter()
            .map(|&lvl| Group {
                level: lvl,
                members: z
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == lvl)
                    .map(|(i, _)| i)
                    .collect(),
            })
            .collect();
        return Ok(groups);
    }

    // equal-count bins on the z ranks
    let bins = opts.bins.max(1);
    let n = z.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
    let mut groups: Vec<Group> = Vec::with_capacity(bins);
    for b in 0..bins {
        let start = b * n / bins;
        let end = ((b + 1) * n / bins).min(n);
        if start >= end {
            continue;
        }
        let members: Vec<usize> = order[start..end].to_vec();
        groups.push(Group {
            level: z[members[0]],
            members,
        });
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(n: usize) -> (Vec<f64>, Vec<f64>) {
        // X = Z + W with a deterministic low-discrepancy "W"
        let mut x = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let zi = (i % 2) as f64;
            let u = (i as f64 * 0.6180339887498949) % 1.0;
            x.push(zi + u);
            z.push(zi);
        }
        (x, z)
    }

    #[test]
    fn control_values_are_uniform_per_level() {
        let (x, z) = design(2000);
        let res = control_variable(&x, &z).unwrap();
        assert_eq!(res.levels.len(), 2);
        let d = crate::stats::ks_statistic(&res.r, |v| v.clamp(0.0, 1.0));
        assert!(d < 0.05, "KS {d}");
    }

    #[test]
    fn deterministic_first_stage_is_flagged() {
        let z: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let x: Vec<f64> = z.iter().map(|v| 3.0 * v).collect();
        match control_variable(&x, &z) {
            Err(Error::DegenerateControl { levels }) => {
                assert!(levels.contains('0') && levels.contains('1'));
            }
            other => panic!("expected degenerate control, got {other:?}"),
        }
    }

    #[test]
    fn sparse_level_is_an_error() {
        let mut z = vec![0.0; 50];
        z.extend_from_slice(&[1.0; 5]);
        let x: Vec<f64> = (0..55).map(|i| i as f64 * 0.37 % 1.0 + z[i]).collect();
        match control_variable(&x, &z) {
            Err(Error::SparseLevel { level, count, .. }) => {
                assert_eq!(level, "1");
                assert_eq!(count, 5);
            }
            other => panic!("expected sparse level, got {other:?}"),
        }
    }

    #[test]
    fn uniform_target_is_bitwise_equal_to_baseline() {
        let (x, z) = design(500);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let uniform = Cdf::from_fn(grid, |v| v, Interpolation::Linear).unwrap();
        let base = control_variable(&x, &z).unwrap();
        let gen = generalized_control_variable(&x, &z, &uniform).unwrap();
        assert_eq!(base.r, gen.r);
    }

    #[test]
    fn non_invertible_target_rejected() {
        let (x, z) = design(200);
        let flat = Cdf::new(
            vec![0.0, 0.5, 1.0],
            vec![0.0, 0.5, 0.5],
            Interpolation::Linear,
        )
        .unwrap();
        assert!(generalized_control_variable(&x, &z, &flat).is_err());
        let step = crate::dist1d::ecdf(&x).unwrap();
        assert!(generalized_control_variable(&x, &z, &step).is_err());
    }

    #[test]
    fn continuous_z_uses_equal_count_bins() {
        let n = 600;
        let z: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let x: Vec<f64> = (0..n)
            .map(|i| z[i] + (i as f64 * 0.7548776662466927) % 1.0)
            .collect();
        let res = control_variable(&x, &z).unwrap();
        assert_eq!(res.levels.len(), 10);
        assert!(res.levels.iter().all(|l| l.count == 60));
    }
}

//! Changes-in-changes estimation.
//!
//! Univariate: the counterfactual CDF of the treated group absent treatment
//! is the composition `F_{T0}(F_{C0}^{-1}(F_{C1}(y)))` of empirical CDFs;
//! note the inner rearrangement runs from the post period back to the pre
//! period in the control group. Multivariate: the control-group trend map is
//! estimated as an entropic transport map `C0 -> C1` and pushed through the
//! treated pre-period sample; the unit-level counterfactual map transports
//! observed treated-post outcomes onto the counterfactual sample.

use ndarray::Array2;

use crate::dist1d::{ecdf, Cdf, Map1D};
use crate::error::{Error, Result};
use crate::ot::simplex::solve_lp;
use crate::ot::{entropic_map, EntropicTransport, MapEstimate, MapMethod};

/// Default quantile grid: 99 percentiles.
pub fn default_qte_grid() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

/// The four observed samples: control/treated in pre/post periods, stored
/// row-wise with a common dimension.
#[derive(Debug, Clone)]
pub struct CicInput {
    control_pre: Array2<f64>,
    control_post: Array2<f64>,
    treated_pre: Array2<f64>,
    treated_post: Array2<f64>,
    support_warning: Option<String>,
}

impl CicInput {
    pub fn new(
        control_pre: Array2<f64>,
        control_post: Array2<f64>,
        treated_pre: Array2<f64>,
        treated_post: Array2<f64>,
    ) -> Result<Self> {
        let d = control_pre.ncols();
        for (name, sample) in [
            ("control-pre", &control_pre),
            ("control-post", &control_post),
            ("treated-pre", &treated_pre),
            ("treated-post", &treated_post),
        ] {
            if sample.nrows() == 0 {
                return Err(Error::EmptyInput("changes-in-changes cell"));
            }
            if sample.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "changes-in-changes cell dimension",
                    expected: d,
                    got: sample.ncols(),
                });
            }
            if sample.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "{name} sample contains non-finite values"
                )));
            }
        }
        let support_warning = containment_warning(&treated_pre, &control_pre);
        Ok(Self {
            control_pre,
            control_post,
            treated_pre,
            treated_post,
            support_warning,
        })
    }

    pub fn from_univariate(
        control_pre: &[f64],
        control_post: &[f64],
        treated_pre: &[f64],
        treated_post: &[f64],
    ) -> Result<Self> {
        let col = |s: &[f64]| Array2::from_shape_vec((s.len(), 1), s.to_vec()).expect("shape");
        Self::new(
            col(control_pre),
            col(control_post),
            col(treated_pre),
            col(treated_post),
        )
    }

    pub fn dim(&self) -> usize {
        self.control_pre.ncols()
    }

    /// Set when the treated-pre support is not contained in the control-pre
    /// support (range containment in 1-D, convex hull in higher dimension).
    pub fn support_warning(&self) -> Option<&str> {
        self.support_warning.as_deref()
    }

    pub fn control_pre(&self) -> &Array2<f64> {
        &self.control_pre
    }

    pub fn control_post(&self) -> &Array2<f64> {
        &self.control_post
    }

    pub fn treated_pre(&self) -> &Array2<f64> {
        &self.treated_pre
    }

    pub fn treated_post(&self) -> &Array2<f64> {
        &self.treated_post
    }

    fn univariate_cell(&self, cell: &Array2<f64>) -> Vec<f64> {
        cell.column(0).to_vec()
    }
}

/// Estimation output: a counterfactual CDF (1-D) or sample (multivariate),
/// quantile treatment effects, and effect summaries.
#[derive(Debug, Clone)]
pub struct CicResult {
    pub counterfactual_cdf: Option<Cdf>,
    pub counterfactual_sample: Option<Array2<f64>>,
    pub q_grid: Vec<f64>,
    /// `F_{T1}^{-1}(q) - F_counterfactual^{-1}(q)` per grid level (1-D only).
    pub qte: Vec<f64>,
    /// Mean of observed treated-post minus counterfactual, per coordinate.
    pub mean_effect: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Univariate changes-in-changes on empirical step CDFs.
pub fn cic_univariate(input: &CicInput, q_grid: &[f64]) -> Result<CicResult> {
    if input.dim() != 1 {
        return Err(Error::DimensionMismatch {
            context: "cic_univariate input dimension",
            expected: 1,
            got: input.dim(),
        });
    }
    let c0 = input.univariate_cell(&input.control_pre);
    let c1 = input.univariate_cell(&input.control_post);
    let t0 = input.univariate_cell(&input.treated_pre);
    let t1 = input.univariate_cell(&input.treated_post);

    let mut warnings = Vec::new();
    for (name, s) in [
        ("control-pre", &c0),
        ("control-post", &c1),
        ("treated-pre", &t0),
        ("treated-post", &t1),
    ] {
        if s.len() < 30 {
            warnings.push(format!("{name} cell has only {} observations", s.len()));
        }
    }

    // hard error only for material support violations; small-sample slop
    // (order range/sqrt(n)) is downgraded to the warning from construction
    let (c0_lo, c0_hi) = min_max(&c0);
    let (t0_lo, t0_hi) = min_max(&t0);
    let slack = (c0_hi - c0_lo).max(1e-12) / (c0.len() as f64).sqrt();
    if t0_lo < c0_lo - slack || t0_hi > c0_hi + slack {
        return Err(Error::SupportViolation(format!(
            "treated-pre range [{t0_lo}, {t0_hi}] exceeds control-pre range [{c0_lo}, {c0_hi}] \
             beyond the sampling slack {slack:.3e}"
        )));
    }
    if let Some(w) = &input.support_warning {
        warnings.push(w.clone());
    }

    let f_c0 = ecdf(&c0)?;
    let f_c1 = ecdf(&c1)?;
    let f_t0 = ecdf(&t0)?;
    let f_t1 = ecdf(&t1)?;

    let counterfactual = compose_counterfactual_cdf(&f_t0, &f_c0, &f_c1)?;
    let qte: Vec<f64> = q_grid
        .iter()
        .map(|&q| f_t1.quantile(q) - counterfactual.quantile(q))
        .collect();
    let mean_obs = mean(&t1);
    let mean_cf = step_cdf_mean(&counterfactual);
    Ok(CicResult {
        counterfactual_cdf: Some(counterfactual),
        counterfactual_sample: None,
        q_grid: q_grid.to_vec(),
        qte,
        mean_effect: vec![mean_obs - mean_cf],
        warnings,
    })
}

/// `F(y) = F_t0(F_c0^{-1}(F_c1(y)))` as a step CDF with knots at the
/// control-post sample points.
pub(crate) fn compose_counterfactual_cdf(f_t0: &Cdf, f_c0: &Cdf, f_c1: &Cdf) -> Result<Cdf> {
    let grid: Vec<f64> = f_c1.grid().to_vec();
    let values: Vec<f64> = f_c1
        .values()
        .iter()
        .map(|&v| f_t0.eval(f_c0.quantile(v)))
        .collect();
    // enforce monotonicity against floating noise in the composition
    let mut mono = values;
    for i in 1..mono.len() {
        if mono[i] < mono[i - 1] {
            mono[i] = mono[i - 1];
        }
    }
    Cdf::new(grid, mono, crate::dist1d::Interpolation::Step)
}

/// Multivariate changes-in-changes: the trend map is the entropic transport
/// `C0 -> C1`, applied to the treated-pre sample.
pub fn cic_multivariate(input: &CicInput, epsilon: f64) -> Result<CicResult> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be positive, got {epsilon}"),
        });
    }
    let mut warnings = Vec::new();
    if let Some(w) = &input.support_warning {
        warnings.push(w.clone());
    }
    if input.dim() == 1 {
        warnings.push("1-D input routed through the multivariate path".into());
    }

    let trend = EntropicTransport::fit(&input.control_pre, &input.control_post, epsilon)?;
    let counterfactual = trend.transport(&input.treated_pre)?;

    let d = input.dim();
    let mean_effect: Vec<f64> = (0..d)
        .map(|k| column_mean(&input.treated_post, k) - column_mean(&counterfactual, k))
        .collect();
    Ok(CicResult {
        counterfactual_cdf: None,
        counterfactual_sample: Some(counterfactual),
        q_grid: Vec::new(),
        qte: Vec::new(),
        mean_effect,
        warnings,
    })
}

/// Default trend-map regularization: 5% of the median pairwise squared
/// distance between the two control samples.
pub fn default_trend_epsilon(input: &CicInput) -> f64 {
    let a = &input.control_pre;
    let b = &input.control_post;
    let (n, m, d) = (a.nrows(), b.nrows(), a.ncols());
    let stride = ((n * m) / 100_000 + 1).max(1);
    let mut dists = Vec::new();
    let mut k = 0usize;
    for i in 0..n {
        for j in 0..m {
            if k % stride == 0 {
                let mut sq = 0.0;
                for c in 0..d {
                    let diff = a[[i, c]] - b[[j, c]];
                    sq += diff * diff;
                }
                dists.push(sq);
            }
            k += 1;
        }
    }
    let med = crate::stats::median(&dists);
    (0.05 * med).max(1e-9)
}

/// Unit-level counterfactual map and per-unit effects.
#[derive(Debug, Clone)]
pub struct CicUnitMap {
    /// Map from observed treated-post outcomes to their counterfactuals.
    pub map: MapEstimate,
    /// `Y_T1 - T(Y_T1)` per unit (rows align with the treated-post sample).
    pub effects: Array2<f64>,
}

/// Estimates the map from the observed treated-post distribution onto the
/// counterfactual one and reports per-unit effects.
pub fn cic_unit_map(input: &CicInput, epsilon: f64) -> Result<CicUnitMap> {
    let map = if input.dim() == 1 {
        // 1-D: quantile composition between F_T1 and the counterfactual CDF
        let result = cic_univariate(input, &default_qte_grid())?;
        let cf = result.counterfactual_cdf.expect("univariate path");
        let t1 = input.univariate_cell(&input.treated_post);
        let f_t1 = ecdf(&t1)?;
        let rearrangement = crate::dist1d::monotone_rearrangement(&f_t1, &cf)?;
        let mapped: Vec<f64> = t1.iter().map(|&y| rearrangement.eval(y)).collect();
        MapEstimate {
            source_points: input.treated_post.clone(),
            mapped_points: Array2::from_shape_vec((mapped.len(), 1), mapped).expect("shape"),
            method: MapMethod::QuantileComposition,
        }
    } else {
        let multi = cic_multivariate(input, epsilon)?;
        let counterfactual = multi.counterfactual_sample.expect("multivariate path");
        entropic_map(&input.treated_post, &counterfactual, epsilon)?
    };
    let effects = &map.source_points - &map.mapped_points;
    Ok(CicUnitMap { map, effects })
}

/// Exact 1-D monotone rearrangement between two step CDFs as a map object
/// (used by the unit-map path above and by oracle tests).
pub fn quantile_composition_map(f_source: &Cdf, f_target: &Cdf) -> Result<Map1D> {
    crate::dist1d::monotone_rearrangement(f_source, f_target)
}

fn containment_warning(treated_pre: &Array2<f64>, control_pre: &Array2<f64>) -> Option<String> {
    let d = treated_pre.ncols();
    if d == 1 {
        let (t_lo, t_hi) = min_max(&treated_pre.column(0).to_vec());
        let (c_lo, c_hi) = min_max(&control_pre.column(0).to_vec());
        if t_lo < c_lo || t_hi > c_hi {
            return Some(format!(
                "treated-pre range [{t_lo}, {t_hi}] is not contained in control-pre range \
                 [{c_lo}, {c_hi}]"
            ));
        }
        return None;
    }
    // convex-hull containment via LP feasibility per treated point
    let n_c = control_pre.nrows();
    let mut a = Array2::zeros((d + 1, n_c));
    for j in 0..n_c {
        for k in 0..d {
            a[[k, j]] = control_pre[[j, k]];
        }
        a[[d, j]] = 1.0;
    }
    let c = ndarray::Array1::zeros(n_c);
    let mut outside = 0usize;
    for i in 0..treated_pre.nrows() {
        let mut b = ndarray::Array1::zeros(d + 1);
        for k in 0..d {
            b[k] = treated_pre[[i, k]];
        }
        b[d] = 1.0;
        if solve_lp(&a, &b, &c).is_err() {
            outside += 1;
        }
    }
    if outside > 0 {
        Some(format!(
            "{outside} of {} treated-pre points lie outside the convex hull of the control-pre \
             sample",
            treated_pre.nrows()
        ))
    } else {
        None
    }
}

fn min_max(sample: &[f64]) -> (f64, f64) {
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

fn column_mean(sample: &Array2<f64>, col: usize) -> f64 {
    sample.column(col).sum() / sample.nrows() as f64
}

/// Mean of the distribution represented by a step CDF.
fn step_cdf_mean(cdf: &Cdf) -> f64 {
    let mut acc = 0.0;
    let mut prev = 0.0;
    for (y, &v) in cdf.grid().iter().zip(cdf.values()) {
        acc += y * (v - prev);
        prev = v;
    }
    // a composed counterfactual CDF may top out slightly below one;
    // renormalize by the represented mass
    if prev > 0.0 {
        acc / prev
    } else {
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_sample(n: usize, lo: f64, hi: f64, phase: f64) -> Vec<f64> {
        // low-discrepancy fill of (lo, hi)
        (0..n)
            .map(|i| lo + (hi - lo) * (((i as f64 + 0.5) / n as f64 + phase) % 1.0))
            .collect()
    }

    #[test]
    fn flagship_uniform_design_recovers_uniform_counterfactual() {
        // C0 ~ U[0,1], C1 ~ U[0,2], T0 ~ U[0,1/2] -> counterfactual U[0,1]
        let n = 4000;
        let input = CicInput::from_univariate(
            &uniform_sample(n, 0.0, 1.0, 0.0),
            &uniform_sample(n, 0.0, 2.0, 0.31),
            &uniform_sample(n, 0.0, 0.5, 0.17),
            &uniform_sample(n, 0.0, 1.0, 0.53),
        )
        .unwrap();
        let result = cic_univariate(&input, &default_qte_grid()).unwrap();
        let cf = result.counterfactual_cdf.unwrap();
        let ks = (0..=100)
            .map(|i| {
                let y = i as f64 / 100.0;
                (cf.eval(y) - y).abs()
            })
            .fold(0.0, f64::max);
        assert!(ks <= 0.05, "KS {ks}");
    }

    #[test]
    fn no_time_trend_returns_treated_pre() {
        let n = 2000;
        let c = uniform_sample(n, 0.0, 1.0, 0.0);
        let t0 = uniform_sample(n, 0.1, 0.6, 0.4);
        let input = CicInput::from_univariate(&c, &c, &t0, &t0).unwrap();
        let result = cic_univariate(&input, &default_qte_grid()).unwrap();
        let cf = result.counterfactual_cdf.unwrap();
        let f_t0 = ecdf(&t0).unwrap();
        for y in [0.15, 0.3, 0.45, 0.55] {
            assert!((cf.eval(y) - f_t0.eval(y)).abs() < 0.02, "y={y}");
        }
    }

    #[test]
    fn identical_groups_make_counterfactual_equal_control_post() {
        let n = 2000;
        let c0 = uniform_sample(n, 0.0, 1.0, 0.0);
        let c1 = uniform_sample(n, 0.0, 2.0, 0.3);
        let input = CicInput::from_univariate(&c0, &c1, &c0, &c1).unwrap();
        let result = cic_univariate(&input, &default_qte_grid()).unwrap();
        let cf = result.counterfactual_cdf.unwrap();
        let f_c1 = ecdf(&c1).unwrap();
        for y in [0.2, 0.8, 1.4, 1.9] {
            assert!((cf.eval(y) - f_c1.eval(y)).abs() < 0.03, "y={y}");
        }
        // QTE collapses to F_T1^{-1} - F_C1^{-1} ~ 0 here
        assert!(result.qte.iter().all(|e| e.abs() < 0.05));
    }

    #[test]
    fn material_support_violation_is_an_error() {
        let n = 500;
        let input = CicInput::from_univariate(
            &uniform_sample(n, 0.0, 1.0, 0.0),
            &uniform_sample(n, 0.0, 2.0, 0.3),
            &uniform_sample(n, 0.0, 1.8, 0.1), // far outside control-pre
            &uniform_sample(n, 0.0, 1.0, 0.5),
        )
        .unwrap();
        assert!(input.support_warning().is_some());
        match cic_univariate(&input, &default_qte_grid()) {
            Err(Error::SupportViolation(msg)) => assert!(msg.contains("range")),
            other => panic!("expected support violation, got {other:?}"),
        }
    }

    #[test]
    fn counterfactual_cdf_is_monotone_for_arbitrary_inputs() {
        let c0 = vec![0.3, 0.9, 0.91, 1.5, 2.2, 0.01, 1.9, 0.77];
        let c1 = vec![1.0, 1.01, 0.2, 3.0, 2.8, 0.5, 0.6, 2.0];
        let t0 = vec![0.4, 0.5, 1.2, 0.9, 1.4, 0.2, 0.6, 1.1];
        let t1 = vec![2.0, 0.1, 0.7, 1.8, 2.4, 1.0, 0.9, 0.3];
        let input = CicInput::from_univariate(&c0, &c1, &t0, &t1).unwrap();
        let result = cic_univariate(&input, &default_qte_grid()).unwrap();
        let cf = result.counterfactual_cdf.unwrap();
        for w in cf.values().windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn unit_map_one_d_matches_quantile_composition() {
        let n = 800;
        let input = CicInput::from_univariate(
            &uniform_sample(n, 0.0, 1.0, 0.0),
            &uniform_sample(n, 0.0, 2.0, 0.31),
            &uniform_sample(n, 0.0, 0.5, 0.17),
            &uniform_sample(n, 0.5, 1.5, 0.53),
        )
        .unwrap();
        let unit = cic_unit_map(&input, 0.05).unwrap();
        assert_eq!(unit.map.method, MapMethod::QuantileComposition);
        // T1 ~ counterfactual + 0.5, so per-unit effects ~ 0.5
        let mean_eff = unit.effects.column(0).sum() / n as f64;
        assert!((mean_eff - 0.5).abs() < 0.05, "{mean_eff}");
    }
}

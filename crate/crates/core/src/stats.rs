//! Order statistics and two-sample diagnostics shared across estimators.

/// Median of a sample (average of middle pair for even lengths).
pub fn median(sample: &[f64]) -> f64 {
    assert!(!sample.is_empty(), "median of empty sample");
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median absolute deviation around the median.
pub fn mad(sample: &[f64]) -> f64 {
    let m = median(sample);
    let dev: Vec<f64> = sample.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.total_cmp(v));
    ys.sort_by(|u, v| u.total_cmp(v));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic survival function of the Kolmogorov distribution,
/// `P(sqrt(n_eff) * D > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Approximate p-value for a two-sample KS statistic.
pub fn ks_two_sample_pvalue(d: f64, n: usize, m: usize) -> f64 {
    let n_eff = (n * m) as f64 / (n + m) as f64;
    kolmogorov_sf(n_eff.sqrt() * d)
}

/// Fisher's method for combining independent p-values.
///
/// Returns the combined p-value from `-2 * sum(ln p_i) ~ chi2(2k)`.
pub fn fisher_combined_pvalue(pvalues: &[f64]) -> f64 {
    assert!(!pvalues.is_empty(), "no p-values to combine");
    let stat: f64 = pvalues.iter().map(|p| -2.0 * p.max(1e-300).ln()).sum();
    chi2_sf_even(stat, 2 * pvalues.len())
}

/// Survival function of the chi-square distribution with even degrees of
/// freedom: closed form `exp(-x/2) * sum_{i<k} (x/2)^i / i!` for dof = 2k.
fn chi2_sf_even(x: f64, dof: usize) -> f64 {
    assert!(dof % 2 == 0 && dof > 0);
    let k = dof / 2;
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..k {
        term *= half / i as f64;
        sum += term;
    }
    ((-half).exp() * sum).clamp(0.0, 1.0)
}

/// Sample energy distance between two d-dimensional samples stored row-wise.
pub fn energy_distance(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    let cross = mean_pairwise_dist(a, b);
    let within_a = mean_pairwise_dist(a, a);
    let within_b = mean_pairwise_dist(b, b);
    2.0 * cross - within_a - within_b
}

fn mean_pairwise_dist(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    let (n, m) = (a.nrows(), b.nrows());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mut sq = 0.0;
            for k in 0..a.ncols() {
                let d = a[[i, k]] - b[[j, k]];
                sq += d * d;
            }
            total += sq.sqrt();
        }
    }
    total / (n * m) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mad() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1.0);
    }

    #[test]
    fn ks_statistic_detects_shift() {
        let a: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
        let d_null = ks_statistic(&a, |x| x.clamp(0.0, 1.0));
        assert!(d_null < 0.01, "{d_null}");
        let d_shift = ks_statistic(&a, |x| (x - 0.3).clamp(0.0, 1.0));
        assert!(d_shift > 0.25, "{d_shift}");
    }

    #[test]
    fn two_sample_ks_null_small() {
        let a: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
        let b: Vec<f64> = (0..400).map(|i| (i as f64 + 0.5) / 400.0).collect();
        let d = ks_two_sample(&a, &b);
        assert!(d < 0.01, "{d}");
        assert!(ks_two_sample_pvalue(d, 500, 400) > 0.9);
    }

    #[test]
    fn kolmogorov_sf_reference_values() {
        // Classical table: Q(1.36) ~ 0.049.
        assert!((kolmogorov_sf(1.36) - 0.049).abs() < 2e-3);
        assert!(kolmogorov_sf(0.0) == 1.0);
    }

    #[test]
    fn fisher_combination_uniform_inputs() {
        let p = fisher_combined_pvalue(&[0.5, 0.5, 0.5, 0.5]);
        assert!(p > 0.5 && p < 0.9, "{p}");
    }
}

//! Transport-map estimation via barycentric projection of entropic plans.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::sinkhorn::sinkhorn;
use super::types::{CostMatrix, DiscreteDistribution, MapEstimate, MapMethod};

/// A fitted entropic transport model between two samples.
///
/// Keeps the target-side dual potential so the barycentric projection can be
/// evaluated at arbitrary points, not just the training source points.
#[derive(Debug, Clone)]
pub struct EntropicTransport {
    target_points: Array2<f64>,
    target_potential: Array1<f64>,
    epsilon: f64,
}

impl EntropicTransport {
    /// Fits the model from uniform empirical measures over the two samples
    /// with squared-Euclidean cost. Duplicate points are merged before the
    /// solve; the projection is still evaluable everywhere.
    pub fn fit(source: &Array2<f64>, target: &Array2<f64>, epsilon: f64) -> Result<Self> {
        if source.nrows() == 0 || target.nrows() == 0 {
            return Err(Error::EmptyInput("map-estimation sample"));
        }
        if source.ncols() != target.ncols() {
            return Err(Error::DimensionMismatch {
                context: "map-estimation sample dimensions",
                expected: source.ncols(),
                got: target.ncols(),
            });
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be positive, got {epsilon}"),
            });
        }

        let p = dedup_to_distribution(source)?;
        let q = dedup_to_distribution(target)?;
        let cost = CostMatrix::sq_euclidean(&p, &q)?;
        let plan = sinkhorn(&p, &q, &cost, epsilon, 1e-9, 20_000)?;
        let (_, psi) = plan.dual_potentials.expect("sinkhorn returns potentials");
        Ok(Self {
            target_points: q.points().clone(),
            target_potential: psi,
            epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Barycentric projection at arbitrary points:
    /// `T(x) = sum_j w_j(x) y_j / sum_j w_j(x)` with
    /// `w_j(x) = exp((psi_j - |x - y_j|^2) / eps)`.
    pub fn transport(&self, xs: &Array2<f64>) -> Result<Array2<f64>> {
        if xs.ncols() != self.target_points.ncols() {
            return Err(Error::DimensionMismatch {
                context: "transport input dimension",
                expected: self.target_points.ncols(),
                got: xs.ncols(),
            });
        }
        let (n, d) = (xs.nrows(), xs.ncols());
        let m = self.target_points.nrows();
        let mut out = Array2::zeros((n, d));
        let mut exponents = vec![0.0_f64; m];
        for i in 0..n {
            let mut max_e = f64::NEG_INFINITY;
            for j in 0..m {
                let mut sq = 0.0;
                for k in 0..d {
                    let diff = xs[[i, k]] - self.target_points[[j, k]];
                    sq += diff * diff;
                }
                let e = (self.target_potential[j] - sq) / self.epsilon;
                exponents[j] = e;
                max_e = max_e.max(e);
            }
            let mut total = 0.0;
            for j in 0..m {
                let w = (exponents[j] - max_e).exp();
                total += w;
                for k in 0..d {
                    out[[i, k]] += w * self.target_points[[j, k]];
                }
            }
            for k in 0..d {
                out[[i, k]] /= total;
            }
        }
        Ok(out)
    }
}

/// Barycentric-projection map estimate between two samples of equal
/// dimension: one mapped point per source point.
pub fn entropic_map(
    source_sample: &Array2<f64>,
    target_sample: &Array2<f64>,
    epsilon: f64,
) -> Result<MapEstimate> {
    let model = EntropicTransport::fit(source_sample, target_sample, epsilon)?;
    let mapped_points = model.transport(source_sample)?;
    Ok(MapEstimate {
        source_points: source_sample.clone(),
        mapped_points,
        method: MapMethod::BarycentricProjection,
    })
}

fn dedup_to_distribution(sample: &Array2<f64>) -> Result<DiscreteDistribution> {
    let (n, d) = (sample.nrows(), sample.ncols());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        for k in 0..d {
            match sample[[a, k]].total_cmp(&sample[[b, k]]) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    let mut points: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < n {
        let row = order[i];
        let mut j = i;
        while j < n && (0..d).all(|k| sample[[order[j], k]] == sample[[row, k]]) {
            j += 1;
        }
        for k in 0..d {
            points.push(sample[[row, k]]);
        }
        weights.push((j - i) as f64 / n as f64);
        i = j;
    }
    let k = weights.len();
    let total: f64 = weights.iter().sum();
    DiscreteDistribution::probability(
        Array2::from_shape_vec((k, d), points).expect("shape"),
        Array1::from_vec(weights.iter().map(|w| w / total).collect()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(sample: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((sample.len(), 1), sample.to_vec()).unwrap()
    }

    #[test]
    fn identical_samples_give_identity_map() {
        let xs = column(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let eps = 1e-3;
        let map = entropic_map(&xs, &xs, eps).unwrap();
        let scale = 1.0;
        for i in 0..xs.nrows() {
            let dev = (map.mapped_points[[i, 0]] - xs[[i, 0]]).abs();
            assert!(dev <= 3.0 * eps * scale, "deviation {dev} at {i}");
        }
    }

    #[test]
    fn degenerate_target_maps_everything_to_it() {
        let xs = column(&[0.0, 1.0, 2.0]);
        let target = column(&[5.0, 5.0, 5.0]);
        let map = entropic_map(&xs, &target, 0.1).unwrap();
        for i in 0..3 {
            assert!((map.mapped_points[[i, 0]] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_map_matches_quantile_composition() {
        // monotone location-scale pair: T(x) = 2x + 1 pushes U[0,1] onto U[1,3]
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let map = entropic_map(&column(&xs), &column(&ys), 5e-3).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..n {
            let expected = 2.0 * xs[i] + 1.0;
            worst = worst.max((map.mapped_points[[i, 0]] - expected).abs());
        }
        // interpolation + entropic blur error
        assert!(worst < 0.08, "worst deviation {worst}");
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        let xs = column(&[0.0]);
        let empty = Array2::<f64>::zeros((0, 1));
        assert!(entropic_map(&empty, &xs, 0.1).is_err());
        let two_d = Array2::<f64>::zeros((3, 2));
        assert!(entropic_map(&xs, &two_d, 0.1).is_err());
        assert!(entropic_map(&xs, &xs, 0.0).is_err());
    }
}

//! Domain types for discrete optimal transport.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability normalization checks.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// A finitely supported measure: `n` support points in `R^d` with
/// nonnegative weights.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    points: Array2<f64>,
    weights: Array1<f64>,
    probability: bool,
}

impl DiscreteDistribution {
    /// A probability distribution; weights must sum to one within 1e-12.
    pub fn probability(points: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let dist = Self::with_masses(points, weights)?;
        let sum = dist.weights.sum();
        if (sum - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NotNormalized {
                sum,
                tol: PROBABILITY_TOL,
            });
        }
        Ok(Self {
            probability: true,
            ..dist
        })
    }

    /// A general finite measure (weights need not sum to one).
    pub fn with_masses(points: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::EmptyInput("distribution support"));
        }
        if points.nrows() != weights.len() {
            return Err(Error::DimensionMismatch {
                context: "support points vs weights",
                expected: points.nrows(),
                got: weights.len(),
            });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidWeights(
                "support points must be finite".into(),
            ));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeights(format!(
                    "weight {w} at index {i} is not a finite nonnegative number"
                )));
            }
        }
        check_pairwise_distinct(&points)?;
        Ok(Self {
            points,
            weights,
            probability: false,
        })
    }

    /// Uniform probability over the given support points.
    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::EmptyInput("distribution support"));
        }
        let weights = Array1::from_elem(n, 1.0 / n as f64);
        // exact renormalization so the sum check passes for any n
        let sum: f64 = weights.sum();
        Self::probability(points, weights.mapv(|w| w / sum))
    }

    /// Uniform probability over a 1-D sample (duplicate values merged).
    pub fn from_sample_1d(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptyInput("1-D sample"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len() as f64;
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let x = sorted[i];
            let mut j = i;
            while j < sorted.len() && sorted[j] == x {
                j += 1;
            }
            pts.push(x);
            wts.push((j - i) as f64 / n);
            i = j;
        }
        let k = pts.len();
        Self::probability(
            Array2::from_shape_vec((k, 1), pts).expect("shape"),
            Array1::from_vec(wts),
        )
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.sum()
    }

    pub fn is_probability(&self) -> bool {
        self.probability
    }

    /// Indices of strictly positive atoms.
    pub(crate) fn support_indices(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

fn check_pairwise_distinct(points: &Array2<f64>) -> Result<()> {
    let n = points.nrows();
    let d = points.ncols();
    // sort row indices lexicographically; duplicates become adjacent
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        for k in 0..d {
            match points[[a, k]].total_cmp(&points[[b, k]]) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    for w in order.windows(2) {
        if (0..d).all(|k| points[[w[0], k]] == points[[w[1], k]]) {
            return Err(Error::InvalidWeights(format!(
                "support points {} and {} coincide",
                w[0].min(w[1]),
                w[0].max(w[1])
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    SqEuclidean,
    Euclidean,
    Custom,
}

/// A nonnegative `n x m` cost matrix between two supports.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    entries: Array2<f64>,
    kind: CostKind,
}

impl CostMatrix {
    pub fn custom(entries: Array2<f64>) -> Result<Self> {
        Self::validated(entries, CostKind::Custom)
    }

    pub fn sq_euclidean(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<Self> {
        let entries = pairwise(p, q, |sq| sq)?;
        Self::validated(entries, CostKind::SqEuclidean)
    }

    pub fn euclidean(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<Self> {
        let entries = pairwise(p, q, f64::sqrt)?;
        Self::validated(entries, CostKind::Euclidean)
    }

    fn validated(entries: Array2<f64>, kind: CostKind) -> Result<Self> {
        for &v in entries.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidCost(format!(
                    "cost entries must be finite and nonnegative (found {v})"
                )));
            }
        }
        Ok(Self { entries, kind })
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn check_dims(&self, p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
        if self.nrows() != p.len() {
            return Err(Error::DimensionMismatch {
                context: "cost rows vs source support",
                expected: p.len(),
                got: self.nrows(),
            });
        }
        if self.ncols() != q.len() {
            return Err(Error::DimensionMismatch {
                context: "cost columns vs target support",
                expected: q.len(),
                got: self.ncols(),
            });
        }
        Ok(())
    }
}

fn pairwise<F: Fn(f64) -> f64>(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    map: F,
) -> Result<Array2<f64>> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            context: "support dimensions",
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let (n, m, d) = (p.len(), q.len(), p.dim());
    let mut c = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let mut sq = 0.0;
            for k in 0..d {
                let diff = p.points()[[i, k]] - q.points()[[j, k]];
                sq += diff * diff;
            }
            c[[i, j]] = map(sq);
        }
    }
    Ok(c)
}

/// A transport plan between two discrete distributions.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub mass: Array2<f64>,
    pub row_marginal_error: f64,
    pub col_marginal_error: f64,
    /// Transport cost `<C, mass>` of the plan (no entropic terms).
    pub objective: f64,
    pub dual_potentials: Option<(Array1<f64>, Array1<f64>)>,
}

impl Coupling {
    pub(crate) fn from_mass(
        mass: Array2<f64>,
        cost: &Array2<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        dual_potentials: Option<(Array1<f64>, Array1<f64>)>,
    ) -> Self {
        let (row_err, col_err) = marginal_errors(&mass, a, b);
        let objective = mass
            .iter()
            .zip(cost.iter())
            .map(|(&g, &c)| if g > 0.0 { g * c } else { 0.0 })
            .sum();
        Self {
            mass,
            row_marginal_error: row_err,
            col_marginal_error: col_err,
            objective,
            dual_potentials,
        }
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.mass.sum_axis(ndarray::Axis(1))
    }

    pub fn col_sums(&self) -> Array1<f64> {
        self.mass.sum_axis(ndarray::Axis(0))
    }
}

pub(crate) fn marginal_errors(
    mass: &Array2<f64>,
    a: &Array1<f64>,
    b: &Array1<f64>,
) -> (f64, f64) {
    let rows = mass.sum_axis(ndarray::Axis(1));
    let cols = mass.sum_axis(ndarray::Axis(0));
    let row_err = rows
        .iter()
        .zip(a.iter())
        .map(|(r, w)| (r - w).abs())
        .fold(0.0, f64::max);
    let col_err = cols
        .iter()
        .zip(b.iter())
        .map(|(c, w)| (c - w).abs())
        .fold(0.0, f64::max);
    (row_err, col_err)
}

/// An unbalanced transport plan, with mass creation/destruction per marginal.
#[derive(Debug, Clone)]
pub struct UnbalancedCoupling {
    pub mass: Array2<f64>,
    /// `p_i - row_i`: positive entries are destroyed source mass, negative
    /// entries are created mass.
    pub destroyed_mass_source: Array1<f64>,
    /// `q_j - col_j`, same sign convention.
    pub destroyed_mass_target: Array1<f64>,
    /// Full objective: transport cost plus entropic and marginal KL penalties.
    pub objective: f64,
    pub epsilon: f64,
    pub rho: f64,
}

impl UnbalancedCoupling {
    pub fn transported_mass(&self) -> f64 {
        self.mass.sum()
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.mass.sum_axis(ndarray::Axis(1))
    }

    pub fn col_sums(&self) -> Array1<f64> {
        self.mass.sum_axis(ndarray::Axis(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapMethod {
    BarycentricProjection,
    QuantileComposition,
}

/// A transport-map estimate: one mapped point per source point.
#[derive(Debug, Clone)]
pub struct MapEstimate {
    pub source_points: Array2<f64>,
    pub mapped_points: Array2<f64>,
    pub method: MapMethod,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn probability_requires_normalized_weights() {
        let pts = array![[0.0], [1.0]];
        let err = DiscreteDistribution::probability(pts.clone(), array![0.6, 0.6]);
        assert!(matches!(err, Err(Error::NotNormalized { .. })));
        assert!(DiscreteDistribution::probability(pts, array![0.5, 0.5]).is_ok());
    }

    #[test]
    fn rejects_duplicate_points_and_negative_weights() {
        let dup = array![[1.0, 2.0], [1.0, 2.0]];
        assert!(DiscreteDistribution::uniform(dup).is_err());
        let pts = array![[0.0], [1.0]];
        assert!(DiscreteDistribution::with_masses(pts, array![0.5, -0.1]).is_err());
    }

    #[test]
    fn sample_1d_merges_ties() {
        let d = DiscreteDistribution::from_sample_1d(&[1.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d.weights()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sq_euclidean_costs() {
        let p = DiscreteDistribution::uniform(array![[0.0, 0.0]]).unwrap();
        let q = DiscreteDistribution::uniform(array![[3.0, 4.0]]).unwrap();
        let c = CostMatrix::sq_euclidean(&p, &q).unwrap();
        assert!((c.entries()[[0, 0]] - 25.0).abs() < 1e-12);
        let c1 = CostMatrix::euclidean(&p, &q).unwrap();
        assert!((c1.entries()[[0, 0]] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn custom_cost_rejects_nan_and_negative() {
        assert!(CostMatrix::custom(array![[1.0, f64::NAN]]).is_err());
        assert!(CostMatrix::custom(array![[-0.5]]).is_err());
    }
}

//! CDF and quantile-function representations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    Step,
    Linear,
}

/// A cumulative distribution function on a finite grid.
///
/// Step CDFs are right-continuous; linear CDFs interpolate between knots.
#[derive(Debug, Clone)]
pub struct Cdf {
    grid: Vec<f64>,
    values: Vec<f64>,
    interp: Interpolation,
}

impl Cdf {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, interp: Interpolation) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyInput("Cdf grid"));
        }
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "Cdf grid/values",
                expected: grid.len(),
                got: values.len(),
            });
        }
        for w in grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidDistribution(format!(
                    "grid not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        let first = values[0];
        let last = *values.last().unwrap();
        if !(first >= -1e-12 && last <= 1.0 + 1e-12) {
            return Err(Error::InvalidDistribution(format!(
                "CDF values outside [0,1]: first {first}, last {last}"
            )));
        }
        for w in values.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "CDF values decrease: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            grid,
            values,
            interp,
        })
    }

    /// Builds a CDF by evaluating `f` on a strictly increasing grid.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F, interp: Interpolation) -> Result<Self> {
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values, interp)
    }

    /// Empirical step CDF of a sample.
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        ecdf(sample)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.interp {
            Interpolation::Step => match self.grid.binary_search_by(|g| g.partial_cmp(&x).unwrap())
            {
                Ok(i) => self.values[i],
                Err(0) => 0.0,
                Err(i) => self.values[i - 1],
            },
            Interpolation::Linear => {
                if x <= self.grid[0] {
                    return self.values[0];
                }
                let last = self.grid.len() - 1;
                if x >= self.grid[last] {
                    return self.values[last];
                }
                match self.grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
                    Ok(i) => self.values[i],
                    Err(i) => {
                        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
                        let (v0, v1) = (self.values[i - 1], self.values[i]);
                        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
                    }
                }
            }
        }
    }

    /// Left-continuous generalized inverse `F^{-1}(q) = inf { z : F(z) >= q }`.
    ///
    /// Clamped to the grid: quantiles below the first attained level return
    /// the first grid point, and levels above the last return the last.
    pub fn quantile(&self, q: f64) -> f64 {
        match self.interp {
            Interpolation::Step => {
                // first grid point whose CDF value reaches q
                let i = self.values.partition_point(|&v| v < q);
                if i >= self.grid.len() {
                    *self.grid.last().unwrap()
                } else {
                    self.grid[i]
                }
            }
            Interpolation::Linear => {
                if q <= self.values[0] {
                    return self.grid[0];
                }
                let last = self.values.len() - 1;
                if q >= self.values[last] {
                    // inf over { z : F(z) >= q }: first z attaining the level
                    let i = self.values.partition_point(|&v| v < self.values[last]);
                    if q > self.values[last] {
                        return self.grid[last];
                    }
                    return self.grid[i.min(last)];
                }
                let i = self.values.partition_point(|&v| v < q);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                if v1 - v0 < 1e-300 {
                    return self.grid[i];
                }
                let (x0, x1) = (self.grid[i - 1], self.grid[i]);
                x0 + (x1 - x0) * (q - v0) / (v1 - v0)
            }
        }
    }

    /// Samples the generalized inverse on a quantile grid.
    pub fn to_quantile_function(&self, q_grid: &[f64]) -> Result<QuantileFunction> {
        let values: Vec<f64> = q_grid.iter().map(|&q| self.quantile(q)).collect();
        QuantileFunction::new(q_grid.to_vec(), values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    /// Smallest and largest grid points.
    pub fn support_range(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }
}

/// A quantile function on a grid of levels in (0, 1].
#[derive(Debug, Clone)]
pub struct QuantileFunction {
    q_grid: Vec<f64>,
    values: Vec<f64>,
}

impl QuantileFunction {
    pub fn new(q_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if q_grid.is_empty() {
            return Err(Error::EmptyInput("quantile grid"));
        }
        if q_grid.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "QuantileFunction grid/values",
                expected: q_grid.len(),
                got: values.len(),
            });
        }
        for w in q_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidDistribution(
                    "quantile grid not strictly increasing".into(),
                ));
            }
        }
        if q_grid[0] <= 0.0 || *q_grid.last().unwrap() > 1.0 + 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "quantile levels must lie in (0,1]: [{}, {}]",
                q_grid[0],
                q_grid.last().unwrap()
            )));
        }
        for w in values.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "quantile values decrease: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { q_grid, values })
    }

    /// Left-continuous evaluation: value of the first level >= q.
    pub fn eval(&self, q: f64) -> f64 {
        let i = self.q_grid.partition_point(|&lvl| lvl < q);
        if i >= self.values.len() {
            *self.values.last().unwrap()
        } else {
            self.values[i]
        }
    }

    pub fn q_grid(&self) -> &[f64] {
        &self.q_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Re-samples the function on a new level grid.
    pub fn resample(&self, q_grid: &[f64]) -> Result<QuantileFunction> {
        let values = q_grid.iter().map(|&q| self.eval(q)).collect();
        QuantileFunction::new(q_grid.to_vec(), values)
    }
}

/// Empirical right-continuous step CDF.
pub fn ecdf(sample: &[f64]) -> Result<Cdf> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("ecdf sample"));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDistribution(
            "sample contains non-finite values".into(),
        ));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut count = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        count += j - i;
        grid.push(x);
        values.push(count as f64 / n);
        i = j;
    }
    Cdf::new(grid, values, Interpolation::Step)
}

/// Empirical quantile function: left-continuous generalized inverse of the
/// empirical CDF, with knots at the jump levels `k/n`.
pub fn quantile(sample: &[f64]) -> Result<QuantileFunction> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("quantile sample"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let q_grid: Vec<f64> = (1..=sorted.len()).map(|k| k as f64 / n).collect();
    QuantileFunction::new(q_grid, sorted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_step_cdf() {
        let f = ecdf(&[1.0]).unwrap();
        assert_eq!(f.eval(0.999), 0.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(5.0), 1.0);
    }

    #[test]
    fn median_of_three() {
        let q = quantile(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(q.eval(0.5), 2.0);
        assert_eq!(q.eval(1.0 / 3.0), 1.0);
        assert_eq!(q.eval(1.0), 3.0);
    }

    #[test]
    fn inverse_composition_identity_at_sample_points() {
        let sample = vec![0.91, -0.3, 2.4, 0.02, 0.02, -1.7, 5.5];
        let f = ecdf(&sample).unwrap();
        for &x in &sample {
            assert_eq!(f.quantile(f.eval(x)), x);
        }
    }

    #[test]
    fn generalized_inverse_identity_on_grid() {
        // F^{-1}(F(z)) <= z <= F^{-1}(F(z)+) on grid points
        let sample = vec![1.0, 2.0, 2.0, 4.0, 9.0];
        let f = ecdf(&sample).unwrap();
        for &z in f.grid() {
            let fz = f.eval(z);
            assert!(f.quantile(fz) <= z + 1e-12);
            let next = f.quantile((fz + 1e-9).min(1.0));
            assert!(z <= next + 1e-12);
        }
    }

    #[test]
    fn ecdf_rejects_empty_and_nan() {
        assert!(ecdf(&[]).is_err());
        assert!(ecdf(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn linear_quantile_inverts_interpolation() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let f = Cdf::from_fn(grid, |x| x / 10.0, Interpolation::Linear).unwrap();
        assert!((f.quantile(0.25) - 2.5).abs() < 1e-12);
        assert!((f.quantile(0.8) - 8.0).abs() < 1e-12);
    }
}

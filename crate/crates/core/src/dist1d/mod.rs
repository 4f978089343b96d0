//! One-dimensional distribution machinery: empirical CDFs and quantile
//! functions, the monotone rearrangement, Frechet-Hoeffding bounds and
//! expectation bounds for quasi-antitone costs.

mod bounds;
mod cdf;

pub use bounds::{
    expectation_bounds, expectation_bounds_with, frechet_cdf_bounds, DEFAULT_QUADRATURE_POINTS,
};
pub use cdf::{ecdf, quantile, Cdf, Interpolation, QuantileFunction};

use crate::error::Result;

/// A nondecreasing map `u -> y` represented by paired grids.
///
/// Evaluation follows the interpolation convention of the source CDF it was
/// built from: step maps are right-continuous, linear maps interpolate.
#[derive(Debug, Clone)]
pub struct Map1D {
    u_grid: Vec<f64>,
    y_values: Vec<f64>,
    interp: Interpolation,
}

impl Map1D {
    pub fn new(u_grid: Vec<f64>, y_values: Vec<f64>, interp: Interpolation) -> Result<Self> {
        if u_grid.is_empty() {
            return Err(crate::error::Error::EmptyInput("Map1D grid"));
        }
        if u_grid.len() != y_values.len() {
            return Err(crate::error::Error::DimensionMismatch {
                context: "Map1D paired grids",
                expected: u_grid.len(),
                got: y_values.len(),
            });
        }
        for w in u_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(crate::error::Error::InvalidDistribution(format!(
                    "Map1D u-grid not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        for w in y_values.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(crate::error::Error::InvalidDistribution(format!(
                    "Map1D values decrease: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            u_grid,
            y_values,
            interp,
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self.interp {
            Interpolation::Step => {
                // right-continuous: value of the last knot at or before u
                match self
                    .u_grid
                    .binary_search_by(|g| g.partial_cmp(&u).unwrap())
                {
                    Ok(i) => self.y_values[i],
                    Err(0) => self.y_values[0],
                    Err(i) => self.y_values[i - 1],
                }
            }
            Interpolation::Linear => {
                if u <= self.u_grid[0] {
                    return self.y_values[0];
                }
                let last = self.u_grid.len() - 1;
                if u >= self.u_grid[last] {
                    return self.y_values[last];
                }
                let i = match self
                    .u_grid
                    .binary_search_by(|g| g.partial_cmp(&u).unwrap())
                {
                    Ok(i) => return self.y_values[i],
                    Err(i) => i,
                };
                let (u0, u1) = (self.u_grid[i - 1], self.u_grid[i]);
                let (y0, y1) = (self.y_values[i - 1], self.y_values[i]);
                y0 + (y1 - y0) * (u - u0) / (u1 - u0)
            }
        }
    }

    pub fn u_grid(&self) -> &[f64] {
        &self.u_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.y_values
    }

    /// Applies the map to a sample.
    pub fn apply(&self, sample: &[f64]) -> Vec<f64> {
        sample.iter().map(|&u| self.eval(u)).collect()
    }
}

/// The monotone rearrangement `u -> F_target^{-1}(F_source(u))`.
///
/// For step sources the returned map reproduces the composition exactly; for
/// linear sources it samples the composition on the source grid.
pub fn monotone_rearrangement(f_source: &Cdf, f_target: &Cdf) -> Result<Map1D> {
    let u_grid: Vec<f64> = f_source.grid().to_vec();
    let y_values: Vec<f64> = f_source
        .grid()
        .iter()
        .zip(f_source.values())
        .map(|(_, &v)| f_target.quantile(v))
        .collect();
    Map1D::new(u_grid, y_values, f_source.interpolation())
}

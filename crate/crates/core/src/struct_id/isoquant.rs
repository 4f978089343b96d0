//! Numerical check that the transport map between two quasi-concave 2-D
//! conditional CDFs acts as the metric projection onto isoquant epigraphs:
//! the entropic-map image of a point is compared with the metric projection
//! of that point onto the target super-level set at the image's level.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::ot::{sinkhorn, CostMatrix, DiscreteDistribution};

/// A 2-D CDF tabulated on a rectangular grid (`values[[i, j]] = F(xs[i], ys[j])`).
#[derive(Debug, Clone)]
pub struct GridCdf2d {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Array2<f64>,
}

impl GridCdf2d {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Array2<f64>) -> Result<Self> {
        if xs.len() < 2 || ys.len() < 2 {
            return Err(Error::EmptyInput("2-D CDF grid"));
        }
        if values.nrows() != xs.len() || values.ncols() != ys.len() {
            return Err(Error::DimensionMismatch {
                context: "2-D CDF grid vs values",
                expected: xs.len() * ys.len(),
                got: values.nrows() * values.ncols(),
            });
        }
        for grid in [&xs, &ys] {
            for w in grid.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(Error::InvalidDistribution(
                        "2-D CDF grid must be strictly increasing".into(),
                    ));
                }
            }
        }
        for i in 0..xs.len() {
            for j in 0..ys.len() {
                let v = values[[i, j]];
                if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::InvalidDistribution(format!(
                        "CDF value {v} out of [0,1]"
                    )));
                }
                if i > 0 && values[[i - 1, j]] > v + 1e-12 {
                    return Err(Error::InvalidDistribution(
                        "2-D CDF decreases along x".into(),
                    ));
                }
                if j > 0 && values[[i, j - 1]] > v + 1e-12 {
                    return Err(Error::InvalidDistribution(
                        "2-D CDF decreases along y".into(),
                    ));
                }
            }
        }
        Ok(Self { xs, ys, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(xs: Vec<f64>, ys: Vec<f64>, f: F) -> Result<Self> {
        let mut values = Array2::zeros((xs.len(), ys.len()));
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                values[[i, j]] = f(x, y);
            }
        }
        Self::new(xs, ys, values)
    }

    /// Bilinear evaluation, clamped to the grid box.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (i, tx) = locate(&self.xs, x);
        let (j, ty) = locate(&self.ys, y);
        let f00 = self.values[[i, j]];
        let f10 = self.values[[i + 1, j]];
        let f01 = self.values[[i, j + 1]];
        let f11 = self.values[[i + 1, j + 1]];
        f00 * (1.0 - tx) * (1.0 - ty) + f10 * tx * (1.0 - ty) + f01 * (1.0 - tx) * ty
            + f11 * tx * ty
    }

    /// The induced cell measure: centers and inclusion-exclusion masses,
    /// dropping cells below `1e-12` relative mass and renormalizing.
    fn cell_measure(&self) -> Result<DiscreteDistribution> {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut centers = Vec::new();
        let mut masses = Vec::new();
        for i in 1..nx {
            for j in 1..ny {
                let m = self.values[[i, j]] - self.values[[i - 1, j]] - self.values[[i, j - 1]]
                    + self.values[[i - 1, j - 1]];
                let m = m.max(0.0);
                if m > 0.0 {
                    centers.push([
                        0.5 * (self.xs[i - 1] + self.xs[i]),
                        0.5 * (self.ys[j - 1] + self.ys[j]),
                    ]);
                    masses.push(m);
                }
            }
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution(
                "2-D CDF carries no mass on the grid".into(),
            ));
        }
        let keep: Vec<usize> = (0..masses.len())
            .filter(|&k| masses[k] / total > 1e-12)
            .collect();
        let kept_total: f64 = keep.iter().map(|&k| masses[k]).sum();
        let mut pts = Array2::zeros((keep.len(), 2));
        let mut wts = Array1::zeros(keep.len());
        for (row, &k) in keep.iter().enumerate() {
            pts[[row, 0]] = centers[k][0];
            pts[[row, 1]] = centers[k][1];
            wts[row] = masses[k] / kept_total;
        }
        let correction = 1.0 - wts.sum();
        wts[0] += correction;
        DiscreteDistribution::probability(pts, wts)
    }

    /// Midpoint test for convex super-level sets on a coarse subgrid.
    fn check_quasi_concave(&self) -> Result<()> {
        let max_v = self.values.iter().copied().fold(0.0, f64::max);
        let stride_x = (self.xs.len() / 16).max(1);
        let stride_y = (self.ys.len() / 16).max(1);
        // bilinear interpolation of a quasi-concave surface can undershoot by
        // O(h^2 * curvature); allow that much slack
        let slack = 3e-3 * max_v;
        for frac in [0.2, 0.4, 0.6, 0.8] {
            let level = frac * max_v;
            let mut set: Vec<[f64; 2]> = Vec::new();
            for i in (0..self.xs.len()).step_by(stride_x) {
                for j in (0..self.ys.len()).step_by(stride_y) {
                    if self.values[[i, j]] >= level {
                        set.push([self.xs[i], self.ys[j]]);
                    }
                }
            }
            for a in 0..set.len() {
                for b in (a + 1)..set.len() {
                    let mid = [
                        0.5 * (set[a][0] + set[b][0]),
                        0.5 * (set[a][1] + set[b][1]),
                    ];
                    if self.eval(mid[0], mid[1]) < level - slack {
                        return Err(Error::NotQuasiConcave(format!(
                            "level {level:.4}: midpoint of ({:.3},{:.3}) and ({:.3},{:.3}) \
                             falls below the level set",
                            set[a][0], set[a][1], set[b][0], set[b][1]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn max_cell_diag(&self) -> f64 {
        let dx = self
            .xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max);
        let dy = self
            .ys
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max);
        (dx * dx + dy * dy).sqrt()
    }
}

fn locate(grid: &[f64], v: f64) -> (usize, f64) {
    let n = grid.len();
    if v <= grid[0] {
        return (0, 0.0);
    }
    if v >= grid[n - 1] {
        return (n - 2, 1.0);
    }
    let i = grid.partition_point(|&g| g <= v) - 1;
    let i = i.min(n - 2);
    let t = (v - grid[i]) / (grid[i + 1] - grid[i]);
    (i, t)
}

#[derive(Debug, Clone)]
pub struct IsoquantProjectionReport {
    pub entropic_image: [f64; 2],
    pub metric_projection: [f64; 2],
    /// Distance between the entropic-map image and the metric projection.
    pub distance: f64,
    /// The F-level defining the projected-onto super-level set.
    pub level: f64,
    /// Largest grid-cell diagonal, for interpreting `distance`.
    pub grid_cell: f64,
}

/// Transports the `g`-measure onto the `f`-measure entropically, takes the
/// image of `x0`, and compares it against the metric projection of `x0` onto
/// `{x : F(x) >= F(image)}`.
pub fn isoquant_projection_check(
    f: &GridCdf2d,
    g: &GridCdf2d,
    x0: [f64; 2],
    epsilon: f64,
) -> Result<IsoquantProjectionReport> {
    if f.xs != g.xs || f.ys != g.ys {
        return Err(Error::GridMismatch(
            "the two 2-D CDFs must share one grid".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be positive, got {epsilon}"),
        });
    }
    f.check_quasi_concave()?;
    g.check_quasi_concave()?;

    let source = g.cell_measure()?;
    let target = f.cell_measure()?;
    let cost = CostMatrix::sq_euclidean(&source, &target)?;
    let plan = sinkhorn(&source, &target, &cost, epsilon, 1e-8, 20_000)?;
    let (_, psi) = plan.dual_potentials.as_ref().expect("potentials");

    // barycentric image of x0 under the fitted plan (out-of-sample form)
    let m = target.len();
    let mut exponents = vec![0.0; m];
    let mut max_e = f64::NEG_INFINITY;
    for j in 0..m {
        let dx = x0[0] - target.points()[[j, 0]];
        let dy = x0[1] - target.points()[[j, 1]];
        let e = (psi[j] - (dx * dx + dy * dy)) / epsilon;
        exponents[j] = e;
        max_e = max_e.max(e);
    }
    let mut total = 0.0;
    let mut image = [0.0, 0.0];
    for j in 0..m {
        let w = (exponents[j] - max_e).exp();
        total += w;
        image[0] += w * target.points()[[j, 0]];
        image[1] += w * target.points()[[j, 1]];
    }
    image[0] /= total;
    image[1] /= total;

    let level = f.eval(image[0], image[1]);
    let projection = metric_projection(f, x0, level);
    let distance =
        ((image[0] - projection[0]).powi(2) + (image[1] - projection[1]).powi(2)).sqrt();

    Ok(IsoquantProjectionReport {
        entropic_image: image,
        metric_projection: projection,
        distance,
        level,
        grid_cell: f.max_cell_diag(),
    })
}

/// Closest point to `x0` with `F >= level`: coarse grid scan followed by two
/// local refinement passes (1/16 and 1/256 cell resolution).
fn metric_projection(f: &GridCdf2d, x0: [f64; 2], level: f64) -> [f64; 2] {
    if f.eval(x0[0], x0[1]) >= level {
        return x0; // x0 is already in the super-level set
    }
    let mut best = [f.xs[f.xs.len() - 1], f.ys[f.ys.len() - 1]];
    let mut best_d = f64::INFINITY;
    for &x in &f.xs {
        for &y in &f.ys {
            if f.eval(x, y) >= level {
                let d = (x - x0[0]).powi(2) + (y - x0[1]).powi(2);
                if d < best_d {
                    best_d = d;
                    best = [x, y];
                }
            }
        }
    }

    let dx = f.xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let dy = f.ys.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    for shrink in [16.0, 256.0] {
        let steps = 33i32;
        let center = best;
        for si in -steps..=steps {
            for sj in -steps..=steps {
                let x = center[0] + si as f64 * dx / shrink;
                let y = center[1] + sj as f64 * dy / shrink;
                if f.eval(x, y) >= level {
                    let d = (x - x0[0]).powi(2) + (y - x0[1]).powi(2);
                    if d < best_d {
                        best_d = d;
                        best = [x, y];
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn gaussian_copula_cdf(n: usize, corr: f64) -> GridCdf2d {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
        GridCdf2d::from_fn(grid.clone(), grid, |x, y| {
            bivariate_normal_cdf(x, y, corr, &normal)
        })
        .unwrap()
    }

    /// Drezner-Wesolowsky style quadrature for the bivariate normal CDF.
    fn bivariate_normal_cdf(x: f64, y: f64, rho: f64, normal: &Normal) -> f64 {
        if rho.abs() < 1e-14 {
            return normal.cdf(x) * normal.cdf(y);
        }
        // integrate d/dr P(X<=x, Y<=y; r) over r in [0, rho]
        let steps = 64;
        let mut acc = normal.cdf(x) * normal.cdf(y);
        let h = rho / steps as f64;
        for k in 0..steps {
            let r = (k as f64 + 0.5) * h;
            let det = 1.0 - r * r;
            let dens = (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * det)).exp()
                / (2.0 * std::f64::consts::PI * det.sqrt());
            acc += h * dens;
        }
        acc.clamp(0.0, 1.0)
    }

    #[test]
    fn identical_cdfs_keep_the_point_fixed() {
        let f = gaussian_copula_cdf(33, 0.0);
        let report = isoquant_projection_check(&f, &f, [0.4, 0.2], 0.08).unwrap();
        let cell = report.grid_cell;
        assert!(
            (report.entropic_image[0] - 0.4).abs() < cell
                && (report.entropic_image[1] - 0.2).abs() < cell,
            "image {:?}",
            report.entropic_image
        );
        assert!(report.distance <= 2.0 * cell, "{}", report.distance);
    }

    #[test]
    fn point_already_on_the_isoquant_projects_to_itself() {
        let f = gaussian_copula_cdf(33, 0.0);
        // projection of x0 onto its own level set is x0 itself
        let x0 = [0.25, -0.1];
        let level = f.eval(x0[0], x0[1]);
        let proj = metric_projection(&f, x0, level);
        let d = ((proj[0] - x0[0]).powi(2) + (proj[1] - x0[1]).powi(2)).sqrt();
        assert!(d <= 1e-9, "projection moved by {d}");
    }

    #[test]
    fn different_correlations_agree_within_two_cells() {
        let f = gaussian_copula_cdf(33, 0.45);
        let g = gaussian_copula_cdf(33, 0.0);
        let report = isoquant_projection_check(&f, &g, [0.5, 0.3], 0.05).unwrap();
        assert!(
            report.distance <= 2.0 * report.grid_cell,
            "distance {} vs cell {}",
            report.distance,
            report.grid_cell
        );
    }

    #[test]
    fn bimodal_cdf_fails_quasi_concavity() {
        // anti-diagonal mixture: the 0.45-level set is an L-shape whose
        // inner corner violates convexity
        let n = 33;
        let grid: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
        let bump = |x: f64, c: f64| (1.0 + ((x - c) * 6.0).tanh()) / 2.0;
        let f = GridCdf2d::from_fn(grid.clone(), grid, |x, y| {
            (0.5 * bump(x, -1.5) * bump(y, 1.5) + 0.5 * bump(x, 1.5) * bump(y, -1.5))
                .clamp(0.0, 1.0)
        })
        .unwrap();
        let err = isoquant_projection_check(&f, &f, [0.0, 0.0], 0.1);
        assert!(matches!(err, Err(Error::NotQuasiConcave(_))), "{err:?}");
    }
}

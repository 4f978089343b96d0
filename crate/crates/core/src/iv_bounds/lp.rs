//! Sharp bounds on counterfactual functionals via the response-type LP:
//! optimize over distributions on response types subject to reproducing the
//! observed conditional law `P(y, x | z)` at every instrument level.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::ot::simplex::{solve_lp, solve_lp_max};

use super::response_types::{enumerate_response_types, ResponseTypeSet};

/// The observed conditional law `P(y, x | z)` on finite supports, with
/// numeric outcome labels.
#[derive(Debug, Clone)]
pub struct ObservedLaw {
    card_y: usize,
    card_x: usize,
    card_z: usize,
    /// Flat layout: `pmf[z * card_y * card_x + y * card_x + x]`.
    pmf: Vec<f64>,
    y_values: Vec<f64>,
}

impl ObservedLaw {
    /// `prob(y, x, z)` supplies the conditional pmf; each `z`-slice must be a
    /// probability vector within 1e-9.
    pub fn new<F: Fn(usize, usize, usize) -> f64>(
        card_y: usize,
        card_x: usize,
        card_z: usize,
        prob: F,
    ) -> Result<Self> {
        Self::with_y_values(
            card_y,
            card_x,
            card_z,
            prob,
            (0..card_y).map(|y| y as f64).collect(),
        )
    }

    pub fn with_y_values<F: Fn(usize, usize, usize) -> f64>(
        card_y: usize,
        card_x: usize,
        card_z: usize,
        prob: F,
        y_values: Vec<f64>,
    ) -> Result<Self> {
        if card_y < 2 || card_x < 2 || card_z < 1 {
            return Err(Error::InvalidParameter {
                name: "cardinalities",
                reason: format!("need card_Y, card_X >= 2 and card_Z >= 1, got ({card_y}, {card_x}, {card_z})"),
            });
        }
        if y_values.len() != card_y {
            return Err(Error::DimensionMismatch {
                context: "outcome labels",
                expected: card_y,
                got: y_values.len(),
            });
        }
        let mut pmf = vec![0.0; card_z * card_y * card_x];
        for z in 0..card_z {
            let mut total = 0.0;
            for y in 0..card_y {
                for x in 0..card_x {
                    let p = prob(y, x, z);
                    if !(p >= 0.0) || !p.is_finite() {
                        return Err(Error::InvalidWeights(format!(
                            "P(y={y}, x={x} | z={z}) = {p} is not a nonnegative probability"
                        )));
                    }
                    pmf[z * card_y * card_x + y * card_x + x] = p;
                    total += p;
                }
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::NotNormalized {
                    sum: total,
                    tol: 1e-9,
                });
            }
        }
        Ok(Self {
            card_y,
            card_x,
            card_z,
            pmf,
            y_values,
        })
    }

    /// Builds the law from microdata with arbitrary numeric supports.
    pub fn from_microdata(y: &[f64], x: &[f64], z: &[f64]) -> Result<Self> {
        if y.is_empty() || y.len() != x.len() || y.len() != z.len() {
            return Err(Error::DimensionMismatch {
                context: "microdata columns",
                expected: y.len().max(1),
                got: x.len().min(z.len()),
            });
        }
        let y_levels = distinct(y);
        let x_levels = distinct(x);
        let z_levels = distinct(z);
        let (card_y, card_x, card_z) = (y_levels.len(), x_levels.len(), z_levels.len());
        let mut counts = vec![0.0_f64; card_z * card_y * card_x];
        let mut z_totals = vec![0.0_f64; card_z];
        for i in 0..y.len() {
            let yi = index_of(&y_levels, y[i]);
            let xi = index_of(&x_levels, x[i]);
            let zi = index_of(&z_levels, z[i]);
            counts[zi * card_y * card_x + yi * card_x + xi] += 1.0;
            z_totals[zi] += 1.0;
        }
        for z in 0..card_z {
            if z_totals[z] == 0.0 {
                return Err(Error::SparseLevel {
                    level: format!("{}", z_levels[z]),
                    count: 0,
                    min: 1,
                });
            }
            for c in counts[z * card_y * card_x..(z + 1) * card_y * card_x].iter_mut() {
                *c /= z_totals[z];
            }
        }
        Self::with_y_values(
            card_y,
            card_x,
            card_z,
            |yy, xx, zz| counts[zz * card_y * card_x + yy * card_x + xx],
            y_levels,
        )
    }

    pub fn prob(&self, y: usize, x: usize, z: usize) -> f64 {
        self.pmf[z * self.card_y * self.card_x + y * self.card_x + x]
    }

    pub fn cards(&self) -> (usize, usize, usize) {
        (self.card_y, self.card_x, self.card_z)
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y_values
    }

    /// The same law restricted to a subset of instrument levels.
    pub fn restrict_z(&self, keep: &[usize]) -> Result<ObservedLaw> {
        if keep.is_empty() || keep.iter().any(|&z| z >= self.card_z) {
            return Err(Error::InvalidParameter {
                name: "keep",
                reason: "instrument levels out of range".into(),
            });
        }
        let pmf = self.pmf.clone();
        let (cy, cx) = (self.card_y, self.card_x);
        ObservedLaw::with_y_values(
            cy,
            cx,
            keep.len(),
            move |y, x, zi| pmf[keep[zi] * cy * cx + y * cx + x],
            self.y_values.clone(),
        )
    }
}

fn distinct(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

fn index_of(levels: &[f64], v: f64) -> usize {
    levels.partition_point(|&l| l < v)
}

/// Linear-in-probability counterfactual functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `E[Y(x)]` under the numeric outcome labels.
    MeanPotential { x: usize },
    /// `P(Y(x) = y)`.
    PotentialProb { x: usize, y: usize },
    /// `E[Y(x1)] - E[Y(x0)]`.
    Ate { x1: usize, x0: usize },
}

#[derive(Debug, Clone)]
pub struct BoundsResult {
    pub functional: Functional,
    pub lower: f64,
    pub upper: f64,
    /// Distribution over response types attaining the lower bound.
    pub argmin: Vec<f64>,
    /// Distribution over response types attaining the upper bound.
    pub argmax: Vec<f64>,
    pub response_types: ResponseTypeSet,
}

/// Sharp lower/upper bounds for the functional over all response-type
/// distributions consistent with the observed law.
///
/// An infeasible LP means the observed law violates the instrument
/// inequalities; the error carries the largest constraint residual.
pub fn bounds_lp(observed: &ObservedLaw, functional: Functional) -> Result<BoundsResult> {
    let (card_y, card_x, card_z) = observed.cards();
    validate_functional(functional, card_x, card_y)?;
    let types = enumerate_response_types(card_y, card_x, card_z)?;
    let n_types = types.len();

    // constraints: one row per (z, y, x) cell plus total mass
    let n_rows = card_z * card_y * card_x + 1;
    let mut a = Array2::zeros((n_rows, n_types));
    let mut b = Array1::zeros(n_rows);
    for z in 0..card_z {
        for y in 0..card_y {
            for x in 0..card_x {
                b[z * card_y * card_x + y * card_x + x] = observed.prob(y, x, z);
            }
        }
    }
    for t in 0..n_types {
        let (fx, fy) = types.split(t);
        for z in 0..card_z {
            let x = fx[z];
            let y = fy[x];
            a[[z * card_y * card_x + y * card_x + x, t]] = 1.0;
        }
        a[[n_rows - 1, t]] = 1.0;
    }
    b[n_rows - 1] = 1.0;

    let c = objective_vector(&types, functional, observed.y_values());
    let map_err = |e: Error| match e {
        Error::LpInfeasible { residual } => Error::InstrumentInequalitiesViolated { residual },
        other => other,
    };
    let min_sol = solve_lp(&a, &b, &c).map_err(map_err)?;
    let max_sol = solve_lp_max(&a, &b, &c).map_err(|e| match e {
        Error::LpInfeasible { residual } => Error::InstrumentInequalitiesViolated { residual },
        other => other,
    })?;

    Ok(BoundsResult {
        functional,
        lower: min_sol.objective,
        upper: max_sol.objective,
        argmin: min_sol.x.to_vec(),
        argmax: max_sol.x.to_vec(),
        response_types: types,
    })
}

fn validate_functional(functional: Functional, card_x: usize, card_y: usize) -> Result<()> {
    let ok = match functional {
        Functional::MeanPotential { x } => x < card_x,
        Functional::PotentialProb { x, y } => x < card_x && y < card_y,
        Functional::Ate { x1, x0 } => x1 < card_x && x0 < card_x,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "functional",
            reason: format!("level out of range for supports ({card_y} outcomes, {card_x} treatments)"),
        })
    }
}

pub(crate) fn objective_vector(
    types: &ResponseTypeSet,
    functional: Functional,
    y_values: &[f64],
) -> Array1<f64> {
    Array1::from_shape_fn(types.len(), |t| {
        let (_, fy) = types.split(t);
        match functional {
            Functional::MeanPotential { x } => y_values[fy[x]],
            Functional::PotentialProb { x, y } => {
                if fy[x] == y {
                    1.0
                } else {
                    0.0
                }
            }
            Functional::Ate { x1, x0 } => y_values[fy[x1]] - y_values[fy[x0]],
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Perfect compliance X = Z with P(Y=1|X=1) = 0.7, P(Y=1|X=0) = 0.4.
    fn perfect_compliance_law() -> ObservedLaw {
        ObservedLaw::new(2, 2, 2, |y, x, z| {
            if x != z {
                return 0.0;
            }
            let p1 = if x == 1 { 0.7 } else { 0.4 };
            if y == 1 {
                p1
            } else {
                1.0 - p1
            }
        })
        .unwrap()
    }

    #[test]
    fn perfect_compliance_point_identifies_ate() {
        let law = perfect_compliance_law();
        let res = bounds_lp(&law, Functional::Ate { x1: 1, x0: 0 }).unwrap();
        assert!((res.lower - 0.3).abs() < 1e-9, "lower {}", res.lower);
        assert!((res.upper - 0.3).abs() < 1e-9, "upper {}", res.upper);
    }

    #[test]
    fn uninformative_instrument_gives_wide_bounds() {
        // X independent of Z, P(Y=1|X=x) = 0.5, P(X=1|z) = 0.5
        let law = ObservedLaw::new(2, 2, 2, |_, _, _| 0.25).unwrap();
        let res = bounds_lp(&law, Functional::Ate { x1: 1, x0: 0 }).unwrap();
        assert!((res.lower + 0.5).abs() < 1e-9, "lower {}", res.lower);
        assert!((res.upper - 0.5).abs() < 1e-9, "upper {}", res.upper);
    }

    #[test]
    fn degenerate_outcome_is_point_bounded_at_one() {
        // Y identically 1 with an instrument that moves every unit through
        // both treatment arms: every type's outcome response is pinned to 1.
        let law = ObservedLaw::new(2, 2, 2, |y, x, z| {
            if x == z && y == 1 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        for x in [0usize, 1] {
            let res = bounds_lp(&law, Functional::PotentialProb { x, y: 1 }).unwrap();
            assert!((res.lower - 1.0).abs() < 1e-9, "lower {}", res.lower);
            assert!((res.upper - 1.0).abs() < 1e-9, "upper {}", res.upper);
        }
    }

    #[test]
    fn violated_instrument_inequalities_are_diagnosed() {
        // a law that cannot come from any response-type distribution:
        // Balke-Pearl inequality P(y,x|z) + P(y', x | z') <= 1 violated
        let law = ObservedLaw::new(2, 2, 2, |y, x, z| match (y, x, z) {
            (1, 0, 0) => 0.9,
            (0, 1, 0) => 0.1,
            (0, 0, 1) => 0.9,
            (1, 1, 1) => 0.1,
            _ => 0.0,
        })
        .unwrap();
        match bounds_lp(&law, Functional::Ate { x1: 1, x0: 0 }) {
            Err(Error::InstrumentInequalitiesViolated { residual }) => {
                assert!(residual > 1e-3, "residual {residual}");
            }
            other => panic!("expected instrument-inequality violation, got {other:?}"),
        }
    }

    #[test]
    fn microdata_roundtrip() {
        let y = vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let x = vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let z = vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let law = ObservedLaw::from_microdata(&y, &x, &z).unwrap();
        let (cy, cx, cz) = law.cards();
        assert_eq!((cy, cx, cz), (2, 2, 2));
        // z = 0 saw (0,0), (1,1), (1,0): each 1/3
        assert!((law.prob(0, 0, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((law.prob(1, 1, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((law.prob(1, 0, 0) - 1.0 / 3.0).abs() < 1e-12);
    }
}

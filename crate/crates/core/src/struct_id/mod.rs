//! Identification tools for structural models `Y = g(X, U)`: mechanism
//! recovery under exogeneity, (generalized) control variables, the
//! binary-instrument fixed-point iteration, and the isoquant metric-projection
//! diagnostic for 2-D conditional CDFs.

mod control;
mod fixed_point;
mod isoquant;
mod mechanism;

pub use control::{
    control_variable, control_variable_with, generalized_control_variable,
    generalized_control_variable_with, ConditioningOptions, ControlVariableResult,
    LevelDiagnostics,
};
pub use fixed_point::{iv_fixed_point, FixedPointTrajectory, IterationDirection};
pub use isoquant::{isoquant_projection_check, GridCdf2d, IsoquantProjectionReport};
pub use mechanism::{identify_exogenous_mechanism, ExogenousMechanism, MechanismBin};

use crate::error::{Error, Result};

/// Observables of a structural model with an optional instrument column.
#[derive(Debug, Clone)]
pub struct StructuralSample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
}

impl StructuralSample {
    pub fn new(y: Vec<f64>, x: Vec<f64>, z: Option<Vec<f64>>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyInput("structural sample"));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "structural sample x vs y",
                expected: y.len(),
                got: x.len(),
            });
        }
        if let Some(z) = &z {
            if z.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    context: "structural sample z vs y",
                    expected: y.len(),
                    got: z.len(),
                });
            }
        }
        let all = y
            .iter()
            .chain(x.iter())
            .chain(z.iter().flatten());
        for v in all {
            if !v.is_finite() {
                return Err(Error::InvalidDistribution(
                    "structural sample contains non-finite values".into(),
                ));
            }
        }
        Ok(Self {
            y,
            x,
            z,
            weights: None,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

//! Finite-support counterfactual bounds for instrumental-variable models
//! (response-type linear programs) and the square-root-ridge estimator for
//! distributionally robust linear IV.

mod lp;
mod response_types;
mod sqrt_ridge;

pub use lp::{bounds_lp, BoundsResult, Functional, ObservedLaw};
pub use response_types::{enumerate_response_types, ResponseTypeSet, RESPONSE_TYPE_LIMIT};
pub use sqrt_ridge::{sqrt_ridge, sqrt_ridge_objective};

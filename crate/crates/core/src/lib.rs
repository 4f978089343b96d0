//! Causal-inference estimators built on discrete optimal transport.
//!
//! The solver layer ([`ot`]) provides exact, entropic, and unbalanced
//! discrete transport together with map estimation. On top of it sit
//! one-dimensional distribution tools ([`dist1d`]), structural-model
//! identification ([`struct_id`]), instrumental-variable bounds and the
//! square-root-ridge estimator ([`iv_bounds`]), changes-in-changes
//! ([`did_cic`]), classic and distributional synthetic controls ([`synth`]),
//! unbalanced-transport covariate matching ([`matching`]), and synthetic
//! scenario generation with known ground truth ([`datagen`]).

pub mod datagen;
pub mod did_cic;
pub mod dist1d;
pub mod error;
pub mod iv_bounds;
pub mod linalg;
pub mod matching;
pub mod ot;
pub mod stats;
pub mod struct_id;
pub mod synth;

pub use error::{Error, Result};

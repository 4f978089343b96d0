//! Discrete optimal-transport solvers: exact transportation LP, entropic and
//! unbalanced Sinkhorn scaling, map estimation, and Wasserstein distances.
//!
//! Every operation is a pure function of its inputs and deterministic.

mod distance;
mod exact;
mod map;
pub mod simplex;
mod sinkhorn;
mod types;
mod unbalanced;

pub use distance::wasserstein_distance;
pub use exact::{solve_exact, EXACT_CELL_LIMIT};
pub use map::{entropic_map, EntropicTransport};
pub use sinkhorn::{sinkhorn, DEFAULT_SINKHORN_MAX_ITER, DEFAULT_SINKHORN_TOL};
pub use types::{
    CostKind, CostMatrix, Coupling, DiscreteDistribution, MapEstimate, MapMethod,
    UnbalancedCoupling, PROBABILITY_TOL,
};
pub use unbalanced::{
    unbalanced_sinkhorn, unbalanced_sinkhorn_with, DEFAULT_UNBALANCED_MAX_ITER,
    UNBALANCED_EXACT_CELL_LIMIT,
};

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("weights are not normalized: sum = {sum:.17} (expected 1 within {tol:e})")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "Sinkhorn did not converge after {iterations} iterations: marginal error {marginal_error:e} > tol {tol:e}"
    )]
    SinkhornNotConverged {
        iterations: usize,
        marginal_error: f64,
        tol: f64,
    },

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("linear program is infeasible (max constraint residual {residual:e})")]
    LpInfeasible { residual: f64 },

    #[error("instrument inequalities violated: max constraint residual {residual:e}")]
    InstrumentInequalitiesViolated { residual: f64 },

    #[error("invalid distribution function: {0}")]
    InvalidDistribution(String),

    #[error(
        "cost function is not quasi-antitone: c({x1},{y1}) + c({x0},{y0}) > c({x1},{y0}) + c({x0},{y1})"
    )]
    NotQuasiAntitone { x0: f64, y0: f64, x1: f64, y1: f64 },

    #[error("conditioning level {level} has only {count} observations (minimum {min})")]
    SparseLevel {
        level: String,
        count: usize,
        min: usize,
    },

    #[error("degenerate control variable: no within-level variation at level(s) {levels}")]
    DegenerateControl { levels: String },

    #[error("quasi-concavity check failed: {0}")]
    NotQuasiConcave(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no overlap: every treated unit was discarded (retained fraction 0)")]
    NoOverlap,

    #[error("empty retained set: no treated units left for effect estimation")]
    EmptyRetainedSet,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unsupported order {0}: only orders 1 and 2 are implemented")]
    UnsupportedOrder(u32),

    #[error("size guard exceeded: {context} would require {size} entries (limit {limit})")]
    SizeGuard {
        context: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

use thiserror::Error;

/// Errors produced by the terrain, solver and path modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed grid file (line {line}): {message}")]
    Parse { line: usize, message: String },

    #[error("grid contains NODATA cells ({count} found)")]
    Nodata { count: usize },

    #[error("NODATA fill made no progress with {remaining} cells left")]
    NodataUnfillable { remaining: usize },

    #[error("numerical blowup at step {step}, node ({i}, {j})")]
    NumericalBlowup { step: usize, i: usize, j: usize },

    #[error("linear solve did not converge: relative residual {residual:e}")]
    LinearSolve { residual: f64 },

    #[error("value function needs {needed} values, budget is {cap}")]
    MemoryBudget { needed: usize, cap: usize },

    #[error("invariant violated at step {step}: {message}")]
    Invariant { step: usize, message: String },

    #[error("invalid bracket: reach({lo}) = {reach_lo}, reach({hi}) = {reach_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        reach_lo: bool,
        reach_hi: bool,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

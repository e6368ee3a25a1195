use thiserror::Error;

/// Failures from the damping root solver. Both variants mean the damped
/// coefficients are all zero and the caller should take the plain map step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DampingError {
    #[error("every singular value of the residual-difference matrix is zero")]
    AllSingularValuesZero,
    #[error("residual has no component in the span of the history")]
    ZeroResidualProjection,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("starting point contains non-finite entries")]
    NonFiniteStart,
    #[error("fixed-point map returned a non-finite value at iteration {iteration}")]
    NonFiniteIterate {
        iteration: usize,
        n_map_evals: usize,
    },
    #[error("this method needs a merit function but the problem has none")]
    MeritMissing,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Errors raised by the built-in EM problems.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("scale matrix is not positive definite")]
    SigmaNotPd,
    #[error("observation {row} has zero mass under the current parameters")]
    ZeroRowMass { row: usize },
    #[error("parameter vector has length {got}, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("invalid data: {0}")]
    InvalidData(String),
}

use thiserror::Error;

/// Errors raised by the estimation and design routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e} below floor {floor:e})")]
    NotPsd { min_eigenvalue: f64, floor: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("singular observation Gram matrix")]
    SingularGram,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scenario does not satisfy the design precondition: {0}")]
    WrongScenarioKind(String),

    #[error("training length {got} is shorter than the required {required}")]
    LengthTooShort { got: usize, required: usize },

    #[error("bisection bracket could not be established: {0}")]
    BracketFailure(String),

    #[error("quadratic program is infeasible: {0}")]
    QcqpInfeasible(String),

    #[error("iteration limit reached after {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("objective increased from {previous:e} to {current:e} at iteration {iteration}")]
    NonMonotoneStep { iteration: usize, previous: f64, current: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::geometry::ProjectionResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid convex set: {0}")]
    InvalidSet(String),

    #[error("unsupported set for this operation: {0}")]
    UnsupportedSet(String),

    #[error("projection did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        best: Box<ProjectionResult>,
    },

    #[error(
        "quadrature budget exceeded: requested standard error {requested:e}, achievable {achievable:e}"
    )]
    QuadratureBudgetExceeded { requested: f64, achievable: f64 },

    #[error("summand index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{experiment}: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },
}

use thiserror::Error;

/// Errors produced by the solvers, the linear-algebra kernels and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A pivot vanished during elimination. `pivot` is the elimination step
    /// when the backend can report it.
    #[error("matrix is singular{}", .pivot.map(|p| format!(" (pivot {p})")).unwrap_or_default())]
    Singular { pivot: Option<usize> },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("fixed-point oracle did not converge after {iterations} iterations (last step {last_step:.3e})")]
    OracleFailure { iterations: usize, last_step: f64 },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid beta: {0}")]
    InvalidBeta(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

use thiserror::Error;

/// Errors raised by the Gabor toolkit.
///
/// The variant name is part of the CLI contract: error messages are printed
/// as `<Variant>: <detail>`.
#[derive(Debug, Error)]
pub enum GaborError {
    #[error("DivisibilityError: {0}")]
    Divisibility(String),
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("GridMismatchError: {0}")]
    GridMismatch(String),
    #[error("LatticeError: {0}")]
    Lattice(String),
    #[error("DimensionError: {0}")]
    Dimension(String),
    #[error("SizeError: {0}")]
    Size(String),
    #[error("NotAFrameError: lower frame bound {lower:e} is not positive relative to upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },
    #[error("ConvergenceError: {solver} did not converge after {iterations} iterations (last change {last_change:e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        last_change: f64,
    },
    #[error("BranchError: {0}")]
    Branch(String),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("CsvError: {0}")]
    Csv(#[from] csv::Error),
    #[error("JsonError: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = GaborError> = std::result::Result<T, E>;

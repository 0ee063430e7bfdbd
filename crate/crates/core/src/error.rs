use crate::model::ValidationReport;

/// Crate-wide error type.
///
/// The CLI maps these onto exit codes: configuration, validation and
/// precondition failures are usage errors (exit 1); everything else is a
/// solver failure (exit 2).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("model validation failed:\n{0}")]
    Validation(ValidationReport),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{context}: no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("bracketing failed: {0}")]
    Bracket(String),

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("truncation radius exceeded cap {cap:.3e} without certifying tolerance {tol:.3e}")]
    TruncationCap { cap: f64, tol: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code classification used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Precondition(_) => 1,
            _ => 2,
        }
    }
}

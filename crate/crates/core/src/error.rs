use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum PatError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("time step {dt:.6e} exceeds the CFL limit {limit:.6e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("numerical blow-up: non-finite value at step {step}")]
    NumericalBlowup { step: usize },

    #[error("iteration did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("argument outside the admissible domain: {0}")]
    Domain(String),

    #[error("Neumann series is not contracting (increment norms {norms:?})")]
    NonContraction { norms: Vec<f64> },

    #[error("visibility failure: {0}")]
    Visibility(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PatError {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            PatError::Config(_)
            | PatError::Geometry(_)
            | PatError::Unsupported(_)
            | PatError::CflViolation { .. }
            | PatError::Format(_)
            | PatError::Io(_) => 2,
            PatError::NumericalBlowup { .. }
            | PatError::Convergence { .. }
            | PatError::Domain(_)
            | PatError::UndefinedMetric(_) => 3,
            PatError::NonContraction { .. } | PatError::Visibility(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, PatError>;

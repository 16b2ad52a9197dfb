use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("empty mask: {0}")]
    EmptyMask(String),

    /// Masks or fields that must share a lattice do not.
    #[error("lattice mismatch: {0}")]
    Mismatch(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (best relative residual {best_residual:.3e}){}",
        start.map(|s| format!(" in start {s}")).unwrap_or_default()
    )]
    Solver {
        iterations: usize,
        best_residual: f64,
        start: Option<usize>,
    },

    #[error("empty report: {0}")]
    EmptyReport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    /// Attach the multi-start index to a solver failure.
    pub fn in_start(self, start: usize) -> Self {
        match self {
            Error::Solver {
                iterations,
                best_residual,
                ..
            } => Error::Solver {
                iterations,
                best_residual,
                start: Some(start),
            },
            other => other,
        }
    }

    /// True for caller errors (bad input), false for numerical failures.
    pub fn is_parameter_error(&self) -> bool {
        !matches!(self, Error::Solver { .. })
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate activation path: {0}")]
    DegeneratePath(String),

    #[error("unsupported diagnostic: {0}")]
    UnsupportedDiagnostic(String),

    #[error("invalid start: {0}")]
    InvalidStart(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("objective diverged at iteration {iteration} (last finite objective {last_finite})")]
    Diverged {
        iteration: usize,
        last_finite: f64,
        trace: Vec<f64>,
    },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("serialization: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            got,
            context,
        })
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite evaluation at coordinate index {index}")]
    NonFinite { index: usize },

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("test field degenerate (|f| below threshold) at grid point {point:?}")]
    DegenerateTestField { point: Vec<usize> },

    #[error("{0}")]
    OutsideGrid(String),

    #[error("operator is not hermitian (max |A - A^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("operators do not commute: defect {defect:e} exceeds tolerance {tolerance:e}")]
    NonCommuting { defect: f64, tolerance: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, found })
    }
}

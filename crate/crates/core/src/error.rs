use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Variants are grouped by the CLI exit category they map to: usage, data,
/// or numeric failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cell: {0}")]
    InvalidCell(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid record {id}: {message}")]
    InvalidRecord { id: String, message: String },

    #[error("empty table: analyses require at least one record")]
    EmptyTable,

    #[error("genotype not in table: {0}")]
    UnknownGenotype(String),

    #[error("unknown query: split={split} epoch={epoch} metric={metric}")]
    UnknownQuery {
        split: String,
        epoch: u32,
        metric: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("search space too large: {size} exceeds cap {cap}")]
    Capacity { size: u128, cap: u128 },

    #[error("sampling exhausted: {0}")]
    SamplingExhausted(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("optimizer did not converge after {iterations} iterations (best log-likelihood {best_log_likelihood}, params {best_params:?})")]
    NonConvergence {
        iterations: usize,
        best_log_likelihood: f64,
        best_params: [f64; 2],
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("mismatched metric sets: {0}")]
    MismatchedMetrics(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error stems from numerical analysis rather than input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Fit(_)
                | Error::NonConvergence { .. }
                | Error::Degenerate(_)
                | Error::Estimation(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

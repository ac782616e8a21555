//! Crate-wide error type.

/// Errors surfaced by any stage of the pipeline.
///
/// Variants are grouped by what went wrong rather than by module, so callers
/// composing stages (sample → estimate → classify) get one error channel.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A mathematical precondition on the data failed (zero vector,
    /// non-stochastic rows, unsampled region, ...).
    #[error("{0}")]
    Domain(String),

    /// Matrix or vector dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Malformed input data; `row` is 1-based and counts data rows
    /// (the header is row 0).
    #[error("row {row}: {message}")]
    Data { row: usize, message: String },

    /// An iterative numerical routine failed to deliver a result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Inconsistent configuration across pipeline stages.
    #[error("configuration error: {0}")]
    Config(String),

    /// Failure while producing Monte Carlo draw `index`.
    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

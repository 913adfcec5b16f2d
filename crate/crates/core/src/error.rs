use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("metric construction failed: {0}")]
    Metric(String),

    #[error("singular {0}x{0} system")]
    Singular(usize),

    #[error("unsupported nonsmooth kind for this metric: {0}")]
    UnsupportedKind(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("oracle failure at iteration {iter}: {msg}")]
    Oracle { iter: usize, msg: String },

    #[error("solver precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed at iteration {iter}: {msg}")]
    Internal { iter: usize, msg: String },
}

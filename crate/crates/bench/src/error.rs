use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{solver} (seed {seed}): {source}")]
    Solver {
        solver: String,
        seed: u64,
        #[source]
        source: afista::Error,
    },

    #[error(transparent)]
    Problem(#[from] afista::Error),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, BenchError::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

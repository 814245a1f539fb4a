use std::path::PathBuf;

use autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MinnError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("config error at {}: key `{key}`: {message}", line.map_or("override".to_string(), |l| format!("line {l}")))]
    Config {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("checkpoint incompatible: {0}")]
    Incompatible(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

pub type Result<T> = std::result::Result<T, MinnError>;

impl MinnError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MinnError::Io {
            path: path.into(),
            source,
        }
    }
}

impl MinnError {
    /// Process exit status for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            MinnError::Config { .. } => 2,
            MinnError::Format(_) | MinnError::Data(_) => 3,
            MinnError::Incompatible(_) => 4,
            MinnError::Domain(_) | MinnError::Contract(_) | MinnError::Autodiff(_) => 5,
            MinnError::Io { .. } => 6,
            MinnError::NonFiniteLoss { .. } => 7,
        }
    }
}

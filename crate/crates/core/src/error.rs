use std::path::PathBuf;

/// Errors surfaced by the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("class {class} has {available} samples but {required} are required")]
    Sizing {
        class: usize,
        available: usize,
        required: usize,
    },

    #[error("brute-force search refused: {feasible} feasible subsets exceed the guard of {guard}")]
    SearchTooLarge { feasible: u128, guard: u128 },

    /// The cause is part of the message rather than the source chain, so
    /// one-line reports do not repeat it.
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

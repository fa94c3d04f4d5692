//! Error type shared across the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file content (wrong column count, non-numeric value...).
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    /// Input violated a documented invariant (duplicate id, bad binary value...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A user-like pair referenced an id absent from the tables.
    #[error("unresolved {kind} id `{id}` in users-likes pairs")]
    UnresolvedId { kind: &'static str, id: String },

    /// Out-of-range or inconsistent parameter.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Trimming removed every row/column.
    #[error("matrix trimmed to empty with thresholds u_L={min_users_per_like}, L_u={min_likes_per_user}")]
    TrimmedToEmpty {
        min_users_per_like: usize,
        min_likes_per_user: usize,
    },

    /// Numerical failure (singular system, divergence, non-finite values).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A pipeline stage was invoked before its prerequisite artifact exists.
    #[error("missing artifact `{artifact}` required by stage `{stage}`; produce it with `{producer}` first")]
    MissingArtifact {
        stage: String,
        artifact: String,
        producer: String,
    },

    /// Another stage holds the output-directory lock.
    #[error("output directory `{0}` is locked by another running stage (remove the .lock file if that run crashed)")]
    Locked(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code class: 1 usage, 2 data error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) => 1,
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}

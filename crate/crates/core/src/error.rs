use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("line {line}: duplicate post_id {post_id:?}")]
    DuplicatePostId { line: usize, post_id: String },

    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },

    #[error("user {user_id:?} carries conflicting labels")]
    ConflictingLabels { user_id: String },

    #[error("post {post_id:?} references unknown user {user_id:?}")]
    UnresolvedUser { post_id: String, user_id: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("duplicate page {page_key:?} in snapshot {snapshot_date}")]
    DuplicatePage { page_key: String, snapshot_date: String },

    #[error("adapter error: {0}")]
    Adapter(String),

    #[error("label {0:?} is not in the class list")]
    UnknownClass(String),

    #[error("feature spaces were built on different training partitions")]
    PartitionMismatch,

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("remote checker: {0}")]
    Remote(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than bad usage.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidArgument(_))
    }
}

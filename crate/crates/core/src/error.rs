use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: more than {limit} concepts")]
    Capacity { limit: usize },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Network failure or timeout, retried before being surfaced.
    #[error("transient fetch error from source {source_name}: {detail}")]
    Fetch { source_name: String, detail: String },

    #[error("source {source_name} answered with status {status}")]
    SourceStatus { source_name: String, status: u16 },

    #[error("parse error at byte {offset}: {detail}")]
    Parse { offset: usize, detail: String },

    #[error("storage error at {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn storage(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Storage {
            path: path.into(),
            source,
        }
    }

    /// Maps a serde_json error onto a byte offset within `input`.
    pub(crate) fn from_json(input: &[u8], err: serde_json::Error) -> Self {
        let offset = byte_offset(input, err.line(), err.column());
        Error::Parse {
            offset,
            detail: err.to_string(),
        }
    }
}

fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    let mut start = 0;
    for (i, b) in input.iter().enumerate() {
        if current == line {
            break;
        }
        if *b == b'\n' {
            current += 1;
            start = i + 1;
        }
    }
    (start + column.saturating_sub(1)).min(input.len())
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

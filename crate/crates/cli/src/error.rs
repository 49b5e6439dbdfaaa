use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("key `{key}`: {reason}")]
    Key { key: String, reason: String },

    #[error("{0}")]
    Model(#[from] nng_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn key(key: &str, reason: impl Into<String>) -> Self {
        CliError::Key {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// 1 for anything the caller can fix, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

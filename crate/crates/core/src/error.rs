//! Error taxonomy shared across the workspace.
//!
//! Callers match on the variant to pick an exit code: validation, format,
//! and I/O problems are caller errors; backend problems are environmental
//! and worth retrying at a higher level.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or data handed to an operation.
    #[error("validation: {0}")]
    Validation(String),

    /// Data that does not satisfy a format spec (missing components,
    /// malformed templates, level mismatches).
    #[error("format: {0}")]
    Format(String),

    /// A model backend failed after retries or broke protocol.
    #[error(transparent)]
    Backend(#[from] BackendError),

    /// Malformed configuration (backend profiles, run config).
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// JSON that failed to parse or serialize; `context` names the file
    /// and line where that happened.
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { context: context.into(), source }
    }
}

/// Failures raised by model backends. Kept separate from [`Error`] so the
/// client layer can retry transport problems without inspecting strings.
#[derive(Debug, Error)]
pub enum BackendError {
    /// The request violated a precondition before anything was sent.
    #[error("invalid request {request_id}: {message}")]
    InvalidRequest { request_id: String, message: String },

    /// Network-level failure that survived the retry budget.
    #[error("transport failure for request {request_id} after {attempts} attempt(s): {message}")]
    Transport {
        request_id: String,
        attempts: u32,
        message: String,
    },

    /// The endpoint answered, but not with what the wire protocol promises.
    #[error("protocol violation for request {request_id}: {message} (body: {body_excerpt:?})")]
    Protocol {
        request_id: String,
        message: String,
        body_excerpt: String,
    },

    /// The configured endpoint cannot serve this kind of request at all.
    #[error("capability: {0}")]
    Capability(String),

    /// The response cache is unreadable or unwritable.
    #[error("cache: {0}")]
    Cache(String),
}

impl BackendError {
    pub fn invalid(request_id: &str, message: impl Into<String>) -> Self {
        BackendError::InvalidRequest {
            request_id: request_id.to_string(),
            message: message.into(),
        }
    }

    pub fn protocol(request_id: &str, message: impl Into<String>, body: &str) -> Self {
        const EXCERPT: usize = 200;
        let body_excerpt = if body.len() > EXCERPT {
            let mut end = EXCERPT;
            while !body.is_char_boundary(end) {
                end -= 1;
            }
            format!("{}...", &body[..end])
        } else {
            body.to_string()
        };
        BackendError::Protocol {
            request_id: request_id.to_string(),
            message: message.into(),
            body_excerpt,
        }
    }
}

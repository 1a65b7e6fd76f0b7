use std::time::Duration;

use super::Role;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("failed to spawn worker `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to connect to worker at {address}: {source}")]
    Connect {
        address: String,
        #[source]
        source: std::io::Error,
    },

    #[error("handshake timeout after {0:?}")]
    HandshakeTimeout(Duration),

    #[error("handshake failed: {0}")]
    Handshake(String),

    #[error("catalog mismatch: engine has {expected}, worker has {got}")]
    CatalogMismatch { expected: String, got: String },

    #[error("role mismatch: expected {expected}, worker serves {got}")]
    RoleMismatch { expected: Role, got: Role },

    #[error("handle serves {actual}, request needs {expected}")]
    WrongRole { expected: Role, actual: Role },

    #[error("request {id} timed out after {after:?}")]
    Timeout { id: u64, after: Duration },

    #[error("worker error{}: [{code}] {message}", id.map(|i| format!(" on request {i}")).unwrap_or_default())]
    WorkerError {
        id: Option<u64>,
        code: String,
        message: String,
    },

    #[error("framing error ({reason}): {line:?}")]
    Framing { line: String, reason: String },

    #[error("reply for unknown request id {got} while waiting for {expected}")]
    UnexpectedId { expected: u64, got: u64 },

    #[error("expected `{expected}` frame, got `{got}`")]
    UnexpectedFrame { expected: &'static str, got: String },

    #[error("image dimension mismatch: requested {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        got: (u32, u32),
    },

    #[error("undecodable image payload: {0}")]
    Undecodable(String),

    #[error("bad probability vector: {0}")]
    BadProbabilities(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("worker connection closed")]
    Closed,

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl ProtocolError {
    pub fn is_timeout(&self) -> bool {
        matches!(
            self,
            ProtocolError::Timeout { .. } | ProtocolError::HandshakeTimeout(_)
        )
    }
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("connection refused: {0}")]
    Refused(String),
    #[error("handshake failed: {0}")]
    HandshakeFailed(String),
    #[error("connection closed")]
    Closed,
    #[error("already connected to {0}")]
    AlreadyConnected(String),
    #[error("bad address `{0}`")]
    BadAddress(String),
    #[error("binary frame received")]
    BinaryFrame,
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("expected `{expected}` from {peer}, got `{got}`")]
    UnexpectedLabel {
        peer: String,
        got: String,
        expected: String,
    },
    #[error("`{got}` from {peer} is not one of {expected:?}")]
    UnknownBranchLabel {
        peer: String,
        got: String,
        expected: Vec<String>,
    },
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("binary frames are not part of the wire protocol")]
    BinaryFrame,
    #[error("session handshake: {0}")]
    Handshake(String),
    #[error("not connected to {0}")]
    NotConnected(String),
    #[error("disconnect from {0}, which is not connected")]
    DisconnectUnknownPeer(String),
    #[error("no acceptor configured for incoming connections")]
    NoAcceptor,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("`{label}` takes {expected} payload values, got {got}")]
    Arity { label: String, expected: usize, got: usize },
    #[error("`{label}` payload: {message}")]
    Payload { label: String, message: String },
    #[error("cannot encode payload: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("timed out waiting for {peer}")]
    Timeout { peer: String },
    #[error("{0}")]
    Application(String),
}

impl From<CodecError> for SessionError {
    fn from(e: CodecError) -> Self {
        SessionError::Protocol(ProtocolError::Malformed(e.to_string()))
    }
}

impl SessionError {
    pub fn app(msg: impl Into<String>) -> Self {
        SessionError::Application(msg.into())
    }
}

//! Frame format: one UTF-8 JSON object `{"label": .., "payload": [..]}` per frame.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CodecError, ProtocolError};

pub const CONNECT: &str = "__connect";
pub const ACCEPT: &str = "__accept";
pub const DISCONNECT: &str = "__disconnect";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireMessage {
    pub label: String,
    pub payload: Vec<Value>,
}

impl WireMessage {
    pub fn new(label: impl Into<String>, payload: Vec<Value>) -> Self {
        WireMessage {
            label: label.into(),
            payload,
        }
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("JSON values always serialise")
    }

    pub fn decode(text: &str) -> Result<Self, ProtocolError> {
        let msg: WireMessage = serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
        if msg.label.is_empty() {
            return Err(ProtocolError::Malformed("empty label".into()));
        }
        Ok(msg)
    }
}

/// Body of the dialer's first frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: String,
    pub role: String,
}

impl Handshake {
    pub fn frame(&self) -> String {
        let body = serde_json::to_value(self).expect("handshake serialises");
        WireMessage::new(CONNECT, vec![body]).encode()
    }

    pub fn parse(frame: &str) -> Result<Self, ProtocolError> {
        let msg = WireMessage::decode(frame)?;
        if msg.label != CONNECT {
            return Err(ProtocolError::Handshake(format!(
                "expected `{CONNECT}`, got `{}`",
                msg.label
            )));
        }
        let [body]: [Value; 1] = msg
            .payload
            .try_into()
            .map_err(|_| ProtocolError::Handshake("handshake takes one payload value".into()))?;
        serde_json::from_value(body).map_err(|e| ProtocolError::Handshake(e.to_string()))
    }
}

pub fn accept_frame() -> String {
    WireMessage::new(ACCEPT, vec![]).encode()
}

pub fn disconnect_frame() -> String {
    WireMessage::new(DISCONNECT, vec![]).encode()
}

/// Helpers used by generated message codecs.
pub mod codec {
    use serde::de::DeserializeOwned;
    use serde::Serialize;
    use serde_json::Value;

    use crate::error::CodecError;

    pub fn encode<T: Serialize>(v: &T) -> Result<Value, CodecError> {
        serde_json::to_value(v).map_err(|e| CodecError::Encode(e.to_string()))
    }

    pub fn decode<T: DeserializeOwned>(label: &str, v: Value) -> Result<T, CodecError> {
        serde_json::from_value(v).map_err(|e| CodecError::Payload {
            label: label.to_string(),
            message: e.to_string(),
        })
    }

    pub fn take<const N: usize>(label: &str, payload: Vec<Value>) -> Result<[Value; N], CodecError> {
        let got = payload.len();
        payload.try_into().map_err(|_| CodecError::Arity {
            label: label.to_string(),
            expected: N,
            got,
        })
    }
}

/// A protocol message type: its wire label and payload codec.
pub trait Message: Sized {
    const LABEL: &'static str;

    fn to_payload(&self) -> Result<Vec<Value>, CodecError>;
    fn from_payload(payload: Vec<Value>) -> Result<Self, CodecError>;

    fn to_wire(&self) -> Result<WireMessage, CodecError> {
        Ok(WireMessage::new(Self::LABEL, self.to_payload()?))
    }

    /// Decodes a whole frame, checking its label first.
    fn from_wire(msg: WireMessage) -> Result<Self, ProtocolError> {
        if msg.label != Self::LABEL {
            return Err(ProtocolError::Malformed(format!(
                "expected `{}`, got `{}`",
                Self::LABEL,
                msg.label
            )));
        }
        Self::from_payload(msg.payload).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }
}

//! Transport abstraction: reliable, ordered, duplex text-frame connections.

use std::collections::{HashMap, VecDeque};

use async_trait::async_trait;

use crate::error::TransportError;
use crate::wire::Handshake;
use crate::{mem, ws};

#[async_trait]
pub trait Connection: Send {
    async fn send_frame(&mut self, text: String) -> Result<(), TransportError>;
    async fn recv_frame(&mut self) -> Result<String, TransportError>;
    async fn close(&mut self) -> Result<(), TransportError>;
}

/// Incoming connections, each handed over with its first frame.
#[async_trait]
pub trait Listener: Send {
    async fn accept(&mut self) -> Result<(Box<dyn Connection>, String), TransportError>;
}

#[async_trait]
pub trait Dialer: Send + Sync {
    async fn dial(&self, address: &str) -> Result<Box<dyn Connection>, TransportError>;
}

/// Supplies the connection a given peer role opened towards us, with its
/// handshake frame. The session validates the handshake and answers it.
#[async_trait]
pub trait Acceptor: Send {
    async fn accept(&mut self, protocol: &str, peer: &str) -> Result<(Box<dyn Connection>, String), TransportError>;
}

/// Routes on the address scheme: `ws://`/`wss://` or `mem:<id>`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultDialer;

#[async_trait]
impl Dialer for DefaultDialer {
    async fn dial(&self, address: &str) -> Result<Box<dyn Connection>, TransportError> {
        dial(address).await
    }
}

pub async fn dial(address: &str) -> Result<Box<dyn Connection>, TransportError> {
    if address.starts_with("ws://") || address.starts_with("wss://") {
        Ok(Box::new(ws::dial(address).await?))
    } else if address.starts_with("mem:") {
        Ok(Box::new(mem::dial(address)?))
    } else {
        Err(TransportError::BadAddress(address.to_string()))
    }
}

/// Binds a listener: `mem:<id>` in process, anything else as a WebSocket
/// bind address (`host:port` or `ws://host:port/path`).
pub async fn listen(address: &str) -> Result<Box<dyn Listener>, TransportError> {
    if address.starts_with("mem:") {
        Ok(Box::new(mem::MemListener::bind(address)?))
    } else {
        Ok(Box::new(ws::WsListener::bind(address).await?))
    }
}

/// Accepts connections from a listener and hands each to whichever role its
/// handshake names, parking the ones that arrive early.
pub struct RoleRouter<L> {
    listener: L,
    parked: HashMap<String, VecDeque<(Box<dyn Connection>, String)>>,
}

impl<L: Listener> RoleRouter<L> {
    pub fn new(listener: L) -> Self {
        RoleRouter {
            listener,
            parked: HashMap::new(),
        }
    }
}

#[async_trait]
impl<L: Listener> Acceptor for RoleRouter<L> {
    async fn accept(&mut self, _protocol: &str, peer: &str) -> Result<(Box<dyn Connection>, String), TransportError> {
        if let Some(c) = self.parked.get_mut(peer).and_then(VecDeque::pop_front) {
            return Ok(c);
        }
        loop {
            let (mut conn, first) = self.listener.accept().await?;
            match Handshake::parse(&first) {
                Ok(h) if h.role == peer => return Ok((conn, first)),
                Ok(h) => self.parked.entry(h.role).or_default().push_back((conn, first)),
                Err(e) => {
                    log::warn!("dropping connection with bad handshake: {e}");
                    let _ = conn.close().await;
                }
            }
        }
    }
}

/// Connections already paired with roles, e.g. by a lobby.
#[derive(Default)]
pub struct PreBound {
    conns: HashMap<String, (Box<dyn Connection>, String)>,
}

impl PreBound {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, role: impl Into<String>, conn: Box<dyn Connection>, first: String) -> Self {
        self.conns.insert(role.into(), (conn, first));
        self
    }
}

#[async_trait]
impl Acceptor for PreBound {
    async fn accept(&mut self, _protocol: &str, peer: &str) -> Result<(Box<dyn Connection>, String), TransportError> {
        self.conns
            .remove(peer)
            .ok_or_else(|| TransportError::Refused(format!("no connection bound for {peer}")))
    }
}

#[async_trait]
impl Listener for Box<dyn Listener> {
    async fn accept(&mut self) -> Result<(Box<dyn Connection>, String), TransportError> {
        (**self).accept().await
    }
}

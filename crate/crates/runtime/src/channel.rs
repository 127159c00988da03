//! Linear session channels.

use std::collections::{BTreeMap, VecDeque};
use std::future::Future;
use std::marker::PhantomData;
use std::sync::Arc;
use std::time::Duration;

use crate::cap;
use crate::error::{ProtocolError, SessionError, TransportError};
use crate::transport::{Acceptor, Connection, DefaultDialer, Dialer};
use crate::wire::{self, Handshake, Message, WireMessage};

/// A role marker type generated for each protocol participant.
pub trait Role {
    const NAME: &'static str;
}

/// Implemented by the self role: the state a session starts in.
pub trait Initial {
    type State;
}

/// Implemented by the self role: the state a session must end in.
pub trait Terminal {
    type State;
}

/// Generated alternatives at a branch state.
pub trait Choices<R: Role>: Sized {
    const LABELS: &'static [&'static str];

    fn dispatch(label: &str, resume: Resume<R>) -> Option<Self>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Outbound,
    Inbound,
}

/// A logical protocol step as it crosses the wire.
#[derive(Debug, Clone, Copy)]
pub struct FrameEvent<'a> {
    pub role: &'a str,
    pub direction: Direction,
    pub peer: &'a str,
    /// Wire label; `__connect` / `__disconnect` for connection actions.
    pub label: &'a str,
    pub arity: usize,
    pub raw: &'a str,
}

pub trait Observer: Send + Sync {
    fn frame(&self, event: &FrameEvent<'_>);
}

impl<F> Observer for F
where
    F: Fn(&FrameEvent<'_>) + Send + Sync,
{
    fn frame(&self, event: &FrameEvent<'_>) {
        self(event)
    }
}

pub struct SessionConfig {
    protocol: String,
    dialer: Arc<dyn Dialer>,
    acceptor: Option<Box<dyn Acceptor>>,
    recv_timeout: Option<Duration>,
    observer: Option<Arc<dyn Observer>>,
}

impl SessionConfig {
    pub fn new(protocol: impl Into<String>) -> Self {
        SessionConfig {
            protocol: protocol.into(),
            dialer: Arc::new(DefaultDialer),
            acceptor: None,
            recv_timeout: None,
            observer: None,
        }
    }

    pub fn acceptor(mut self, acceptor: impl Acceptor + 'static) -> Self {
        self.acceptor = Some(Box::new(acceptor));
        self
    }

    pub fn dialer(mut self, dialer: Arc<dyn Dialer>) -> Self {
        self.dialer = dialer;
        self
    }

    pub fn recv_timeout(mut self, timeout: Duration) -> Self {
        self.recv_timeout = Some(timeout);
        self
    }

    pub fn observer(mut self, observer: Arc<dyn Observer>) -> Self {
        self.observer = Some(observer);
        self
    }
}

struct Link {
    conn: Box<dyn Connection>,
    pending: VecDeque<String>,
}

struct Inner {
    role: &'static str,
    config: SessionConfig,
    links: BTreeMap<&'static str, Link>,
}

impl Inner {
    fn observe(&self, direction: Direction, peer: &str, label: &str, arity: usize, raw: &str) {
        if let Some(o) = &self.config.observer {
            o.frame(&FrameEvent {
                role: self.role,
                direction,
                peer,
                label,
                arity,
                raw,
            });
        }
    }

    fn link(&mut self, peer: &str) -> Result<&mut Link, SessionError> {
        self.links
            .get_mut(peer)
            .ok_or_else(|| ProtocolError::NotConnected(peer.to_string()).into())
    }

    async fn write(&mut self, peer: &str, frame: String) -> Result<(), SessionError> {
        self.link(peer)?.conn.send_frame(frame).await?;
        Ok(())
    }

    async fn read(&mut self, peer: &str) -> Result<String, SessionError> {
        let timeout = self.config.recv_timeout;
        let link = self.link(peer)?;
        if let Some(f) = link.pending.pop_front() {
            return Ok(f);
        }
        let got = match timeout {
            Some(d) => tokio::time::timeout(d, link.conn.recv_frame())
                .await
                .map_err(|_| SessionError::Timeout { peer: peer.to_string() })?,
            None => link.conn.recv_frame().await,
        };
        match got {
            Ok(f) => Ok(f),
            Err(TransportError::BinaryFrame) => Err(ProtocolError::BinaryFrame.into()),
            Err(e) => Err(e.into()),
        }
    }

    fn unread(&mut self, peer: &str, frame: String) {
        if let Some(link) = self.links.get_mut(peer) {
            link.pending.push_front(frame);
        }
    }

    async fn close_all(&mut self) {
        for (_, mut link) in std::mem::take(&mut self.links) {
            let _ = link.conn.close().await;
        }
    }
}

/// A session endpoint for role `R` in protocol state `S`. Every operation
/// consumes the channel and returns one in the successor state.
#[must_use = "a session channel must be driven to the end of its protocol"]
pub struct Channel<R, S> {
    inner: Box<Inner>,
    _state: PhantomData<fn() -> (R, S)>,
}

/// Handle given to [`Choices::dispatch`]; only the runtime creates one.
pub struct Resume<R> {
    inner: Box<Inner>,
    _role: PhantomData<fn() -> R>,
}

impl<R: Role> Resume<R> {
    pub fn channel<S>(self) -> Channel<R, S> {
        Channel {
            inner: self.inner,
            _state: PhantomData,
        }
    }
}

impl<R: Role, S> Channel<R, S> {
    fn advance<T>(self) -> Channel<R, T> {
        Channel {
            inner: self.inner,
            _state: PhantomData,
        }
    }

    pub fn role(&self) -> &'static str {
        self.inner.role
    }

    /// Sends `msg` to the state's peer. At a selection state the message's
    /// type picks the branch.
    pub async fn send<M>(mut self, msg: M) -> Result<Channel<R, <S as cap::Send<M>>::Next>, SessionError>
    where
        S: cap::Send<M>,
        M: Message,
    {
        let peer = <S::Peer as Role>::NAME;
        let wire = msg.to_wire()?;
        let raw = wire.encode();
        self.inner.write(peer, raw.clone()).await?;
        self.inner
            .observe(Direction::Outbound, peer, M::LABEL, wire.payload.len(), &raw);
        Ok(self.advance())
    }

    pub async fn receive(mut self) -> Result<(S::Message, Channel<R, S::Next>), SessionError>
    where
        S: cap::Receive,
    {
        let peer = <S::Peer as Role>::NAME;
        let raw = self.inner.read(peer).await?;
        let wire = WireMessage::decode(&raw)?;
        let expected = <S::Message as Message>::LABEL;
        if wire.label != expected {
            return Err(ProtocolError::UnexpectedLabel {
                peer: peer.to_string(),
                got: wire.label,
                expected: expected.to_string(),
            }
            .into());
        }
        let arity = wire.payload.len();
        let msg = <S::Message as Message>::from_payload(wire.payload)?;
        self.inner.observe(Direction::Inbound, peer, expected, arity, &raw);
        Ok((msg, self.advance()))
    }

    /// Waits for the peer's next message and returns the alternative its label
    /// selects. The message stays queued, so the alternative's first `receive`
    /// yields it.
    pub async fn choice(mut self) -> Result<S::Choices, SessionError>
    where
        S: cap::Branch,
        S::Choices: Choices<R>,
    {
        let peer = <S::Peer as Role>::NAME;
        let raw = self.inner.read(peer).await?;
        let label = WireMessage::decode(&raw)?.label;
        self.inner.unread(peer, raw);
        let resume = Resume {
            inner: self.inner,
            _role: PhantomData,
        };
        <S::Choices as Choices<R>>::dispatch(&label, resume).ok_or_else(|| {
            ProtocolError::UnknownBranchLabel {
                peer: peer.to_string(),
                got: label,
                expected: <S::Choices as Choices<R>>::LABELS
                    .iter()
                    .map(|l| l.to_string())
                    .collect(),
            }
            .into()
        })
    }

    /// Dials `address` and introduces this endpoint to the peer.
    pub async fn connect(mut self, address: &str) -> Result<Channel<R, S::Next>, SessionError>
    where
        S: cap::Connect,
    {
        let peer = <S::Peer as Role>::NAME;
        if self.inner.links.contains_key(peer) {
            return Err(TransportError::AlreadyConnected(peer.to_string()).into());
        }
        let mut conn = self.inner.config.dialer.dial(address).await?;
        let hello = Handshake {
            protocol: self.inner.config.protocol.clone(),
            role: self.inner.role.to_string(),
        }
        .frame();
        conn.send_frame(hello.clone()).await?;
        let reply = match self.inner.config.recv_timeout {
            Some(d) => tokio::time::timeout(d, conn.recv_frame())
                .await
                .map_err(|_| SessionError::Timeout { peer: peer.to_string() })?,
            None => conn.recv_frame().await,
        };
        let reply = match reply {
            Ok(r) => r,
            Err(TransportError::Closed) => {
                return Err(ProtocolError::Handshake(format!("{peer} closed the connection")).into())
            }
            Err(e) => return Err(e.into()),
        };
        let label = WireMessage::decode(&reply)?.label;
        if label != wire::ACCEPT {
            let _ = conn.close().await;
            return Err(ProtocolError::Handshake(format!("{peer} answered `{label}`")).into());
        }
        self.inner.links.insert(
            peer,
            Link {
                conn,
                pending: VecDeque::new(),
            },
        );
        self.inner.observe(Direction::Outbound, peer, wire::CONNECT, 0, &hello);
        Ok(self.advance())
    }

    /// Takes the connection the peer opened, checking its handshake.
    pub async fn accept(mut self) -> Result<Channel<R, S::Next>, SessionError>
    where
        S: cap::Accept,
    {
        let peer = <S::Peer as Role>::NAME;
        if self.inner.links.contains_key(peer) {
            return Err(TransportError::AlreadyConnected(peer.to_string()).into());
        }
        let protocol = self.inner.config.protocol.clone();
        let acceptor = self.inner.config.acceptor.as_mut().ok_or(ProtocolError::NoAcceptor)?;
        let (mut conn, first) = acceptor.accept(&protocol, peer).await?;
        let hello = match Handshake::parse(&first) {
            Ok(h) if h.protocol == protocol && h.role == peer => h,
            Ok(h) => {
                let _ = conn.close().await;
                return Err(ProtocolError::Handshake(format!(
                    "expected {peer} in {protocol}, got {} in {}",
                    h.role, h.protocol
                ))
                .into());
            }
            Err(e) => {
                let _ = conn.close().await;
                return Err(e.into());
            }
        };
        conn.send_frame(wire::accept_frame()).await?;
        self.inner.links.insert(
            peer,
            Link {
                conn,
                pending: VecDeque::new(),
            },
        );
        self.inner
            .observe(Direction::Inbound, peer, wire::CONNECT, 0, &Handshake::frame(&hello));
        Ok(self.advance())
    }

    pub async fn disconnect(mut self) -> Result<Channel<R, S::Next>, SessionError>
    where
        S: cap::Disconnect,
    {
        let peer = <S::Peer as Role>::NAME;
        let mut link = self
            .inner
            .links
            .remove(peer)
            .ok_or_else(|| ProtocolError::DisconnectUnknownPeer(peer.to_string()))?;
        let raw = wire::disconnect_frame();
        link.conn.send_frame(raw.clone()).await?;
        let _ = link.conn.close().await;
        self.inner.observe(Direction::Outbound, peer, wire::DISCONNECT, 0, &raw);
        Ok(self.advance())
    }

    pub async fn await_disconnect(mut self) -> Result<Channel<R, S::Next>, SessionError>
    where
        S: cap::AwaitDisconnect,
    {
        let peer = <S::Peer as Role>::NAME;
        let raw = self.inner.read(peer).await?;
        let label = WireMessage::decode(&raw)?.label;
        if label != wire::DISCONNECT {
            return Err(ProtocolError::UnexpectedLabel {
                peer: peer.to_string(),
                got: label,
                expected: wire::DISCONNECT.to_string(),
            }
            .into());
        }
        if let Some(mut link) = self.inner.links.remove(peer) {
            let _ = link.conn.close().await;
        }
        self.inner.observe(Direction::Inbound, peer, wire::DISCONNECT, 0, &raw);
        Ok(self.advance())
    }

    /// Runs a local effect without changing the protocol state.
    pub async fn lift<F: Future>(self, effect: F) -> (Self, F::Output) {
        let out = effect.await;
        (self, out)
    }
}

/// Runs `program` as role `R`: it receives a channel in the initial state and
/// must hand back one in the terminal state. All connections are closed
/// afterwards.
pub async fn session<R, F, Fut, A>(config: SessionConfig, program: F) -> Result<A, SessionError>
where
    R: Role + Initial + Terminal,
    F: FnOnce(Channel<R, <R as Initial>::State>) -> Fut,
    Fut: Future<Output = Result<(Channel<R, <R as Terminal>::State>, A), SessionError>>,
{
    let ch = Channel {
        inner: Box::new(Inner {
            role: R::NAME,
            config,
            links: BTreeMap::new(),
        }),
        _state: PhantomData,
    };
    let (mut end, value) = program(ch).await?;
    end.inner.close_all().await;
    Ok(value)
}

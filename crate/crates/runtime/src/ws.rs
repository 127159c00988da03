//! WebSocket transport (text frames only).

use std::net::SocketAddr;
use std::time::Duration;

use async_trait::async_trait;
use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncRead, AsyncWrite};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::{self, Message};
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use crate::error::TransportError;
use crate::transport::{Connection, Listener};

/// How long `close` waits for the peer to acknowledge.
const CLOSE_GRACE: Duration = Duration::from_secs(2);

pub struct WsConnection<S> {
    stream: WebSocketStream<S>,
    closed: bool,
}

pub type WsClient = WsConnection<MaybeTlsStream<TcpStream>>;
pub type WsServer = WsConnection<TcpStream>;

fn map_err(e: tungstenite::Error) -> TransportError {
    match e {
        tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed => TransportError::Closed,
        tungstenite::Error::Io(io) if io.kind() == std::io::ErrorKind::ConnectionRefused => {
            TransportError::Refused(io.to_string())
        }
        tungstenite::Error::Io(io) => TransportError::Io(io.to_string()),
        other => TransportError::Io(other.to_string()),
    }
}

pub async fn dial(url: &str) -> Result<WsClient, TransportError> {
    match tokio_tungstenite::connect_async(url).await {
        Ok((stream, _)) => Ok(WsConnection { stream, closed: false }),
        Err(tungstenite::Error::Io(io)) if io.kind() == std::io::ErrorKind::ConnectionRefused => {
            Err(TransportError::Refused(format!("{url}: {io}")))
        }
        Err(tungstenite::Error::Url(e)) => Err(TransportError::BadAddress(format!("{url}: {e}"))),
        Err(e) => Err(TransportError::HandshakeFailed(e.to_string())),
    }
}

#[async_trait]
impl<S> Connection for WsConnection<S>
where
    S: AsyncRead + AsyncWrite + Unpin + Send,
{
    async fn send_frame(&mut self, text: String) -> Result<(), TransportError> {
        if self.closed {
            return Err(TransportError::Closed);
        }
        self.stream.send(Message::text(text)).await.map_err(map_err)
    }

    async fn recv_frame(&mut self) -> Result<String, TransportError> {
        loop {
            match self.stream.next().await {
                Some(Ok(Message::Text(t))) => return Ok(t.as_str().to_string()),
                Some(Ok(Message::Binary(_))) => return Err(TransportError::BinaryFrame),
                Some(Ok(Message::Close(_))) | None => return Err(TransportError::Closed),
                Some(Ok(_)) => continue,
                Some(Err(e)) => return Err(map_err(e)),
            }
        }
    }

    async fn close(&mut self) -> Result<(), TransportError> {
        if std::mem::replace(&mut self.closed, true) {
            return Ok(());
        }
        let _ = self.stream.close(None).await;
        // Drain until the peer's close frame so buffered data is not reset away.
        let _ = tokio::time::timeout(CLOSE_GRACE, async {
            while let Some(Ok(_)) = self.stream.next().await {}
        })
        .await;
        Ok(())
    }
}

pub struct WsListener {
    listener: TcpListener,
}

impl WsListener {
    /// `host:port` or `ws://host:port/path`; port 0 picks a free port.
    pub async fn bind(address: &str) -> Result<Self, TransportError> {
        let hostport = address
            .strip_prefix("ws://")
            .unwrap_or(address)
            .split('/')
            .next()
            .unwrap_or_default();
        let listener = TcpListener::bind(hostport)
            .await
            .map_err(|e| TransportError::BadAddress(format!("{address}: {e}")))?;
        Ok(WsListener { listener })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound socket has an address")
    }

    pub fn url(&self) -> String {
        format!("ws://{}/", self.local_addr())
    }

    /// Next upgraded connection, without reading from it.
    pub async fn accept_raw(&mut self) -> Result<WsServer, TransportError> {
        loop {
            let (tcp, peer) = self
                .listener
                .accept()
                .await
                .map_err(|e| TransportError::Io(e.to_string()))?;
            match tokio_tungstenite::accept_async(tcp).await {
                Ok(stream) => return Ok(WsConnection { stream, closed: false }),
                Err(e) => log::warn!("websocket upgrade from {peer} failed: {e}"),
            }
        }
    }
}

#[async_trait]
impl Listener for WsListener {
    async fn accept(&mut self) -> Result<(Box<dyn Connection>, String), TransportError> {
        loop {
            let mut conn = self.accept_raw().await?;
            match conn.recv_frame().await {
                Ok(first) => return Ok((Box::new(conn), first)),
                Err(e) => log::warn!("connection dropped before its first frame: {e}"),
            }
        }
    }
}

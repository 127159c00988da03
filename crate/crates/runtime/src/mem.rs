//! In-process transport: crossed unbounded queues.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{LazyLock, Mutex};

use async_trait::async_trait;
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

use crate::error::TransportError;
use crate::transport::{Connection, Listener};

#[derive(Debug)]
enum Frame {
    Text(String),
    Binary,
}

#[derive(Debug)]
pub struct MemConnection {
    tx: Option<UnboundedSender<Frame>>,
    rx: UnboundedReceiver<Frame>,
}

/// Two connected endpoints; what one sends the other receives, in order.
pub fn mem_pair() -> (MemConnection, MemConnection) {
    let (atx, arx) = unbounded_channel();
    let (btx, brx) = unbounded_channel();
    (
        MemConnection { tx: Some(atx), rx: brx },
        MemConnection { tx: Some(btx), rx: arx },
    )
}

impl MemConnection {
    fn push(&self, f: Frame) -> Result<(), TransportError> {
        self.tx
            .as_ref()
            .ok_or(TransportError::Closed)?
            .send(f)
            .map_err(|_| TransportError::Closed)
    }

    /// Test hook: binary frames are not part of the protocol and must be rejected.
    pub fn send_binary(&mut self, _bytes: &[u8]) -> Result<(), TransportError> {
        self.push(Frame::Binary)
    }
}

#[async_trait]
impl Connection for MemConnection {
    async fn send_frame(&mut self, text: String) -> Result<(), TransportError> {
        self.push(Frame::Text(text))
    }

    async fn recv_frame(&mut self) -> Result<String, TransportError> {
        match self.rx.recv().await {
            Some(Frame::Text(t)) => Ok(t),
            Some(Frame::Binary) => Err(TransportError::BinaryFrame),
            None => Err(TransportError::Closed),
        }
    }

    async fn close(&mut self) -> Result<(), TransportError> {
        self.tx = None;
        Ok(())
    }
}

static REGISTRY: LazyLock<Mutex<HashMap<String, (u64, UnboundedSender<MemConnection>)>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));
static GENERATION: AtomicU64 = AtomicU64::new(0);

fn key(address: &str) -> &str {
    address.strip_prefix("mem:").unwrap_or(address)
}

/// Listener reachable at `mem:<id>` from anywhere in the process.
pub struct MemListener {
    id: String,
    generation: u64,
    incoming: UnboundedReceiver<MemConnection>,
}

impl MemListener {
    pub fn bind(address: &str) -> Result<Self, TransportError> {
        let id = key(address).to_string();
        let mut reg = REGISTRY.lock().expect("registry lock");
        if reg.get(&id).is_some_and(|(_, tx)| !tx.is_closed()) {
            return Err(TransportError::Refused(format!("mem:{id} is already bound")));
        }
        let (tx, rx) = unbounded_channel();
        let generation = GENERATION.fetch_add(1, Ordering::Relaxed);
        reg.insert(id.clone(), (generation, tx));
        Ok(MemListener {
            id,
            generation,
            incoming: rx,
        })
    }

    pub fn address(&self) -> String {
        format!("mem:{}", self.id)
    }

    /// Next incoming connection, without reading from it.
    pub async fn accept_raw(&mut self) -> Result<MemConnection, TransportError> {
        self.incoming.recv().await.ok_or(TransportError::Closed)
    }
}

impl Drop for MemListener {
    fn drop(&mut self) {
        if let Ok(mut reg) = REGISTRY.lock() {
            if reg.get(&self.id).is_some_and(|(g, _)| *g == self.generation) {
                reg.remove(&self.id);
            }
        }
    }
}

#[async_trait]
impl Listener for MemListener {
    async fn accept(&mut self) -> Result<(Box<dyn Connection>, String), TransportError> {
        let mut conn = self.accept_raw().await?;
        let first = conn.recv_frame().await?;
        Ok((Box::new(conn), first))
    }
}

pub fn dial(address: &str) -> Result<MemConnection, TransportError> {
    let id = key(address);
    let reg = REGISTRY.lock().expect("registry lock");
    let (_, tx) = reg
        .get(id)
        .ok_or_else(|| TransportError::Refused(format!("nothing listening on mem:{id}")))?;
    let (ours, theirs) = mem_pair();
    tx.send(theirs)
        .map_err(|_| TransportError::Refused(format!("nothing listening on mem:{id}")))?;
    Ok(ours)
}

//! Session runtime for generated typestate APIs.
//!
//! A [`Channel`] is indexed by a role marker and a protocol state type. The
//! capability traits in [`cap`] are implemented by generated state types and
//! decide which combinators type-check in which state.

mod channel;
pub mod error;
pub mod mem;
pub mod transport;
pub mod wire;
pub mod ws;

pub use channel::{
    session, Channel, Choices, Direction, FrameEvent, Initial, Observer, Resume, Role, SessionConfig, Terminal,
};
pub use error::{CodecError, ProtocolError, SessionError, TransportError};
pub use mem::{mem_pair, MemConnection, MemListener};
pub use serde_json::Value;
pub use transport::{dial, listen, Acceptor, Connection, DefaultDialer, Dialer, Listener, PreBound, RoleRouter};
pub use wire::{codec, Handshake, Message, WireMessage};
pub use ws::WsListener;

/// Capabilities of protocol states. Each is implemented at most once per
/// state, so the associated types are determined by the state alone.
pub mod cap {
    use crate::channel::Role;
    use crate::wire::Message;

    pub trait Send<M: Message> {
        type Peer: Role;
        type Next;
    }

    /// Marks a state where the choice of message picks the continuation.
    pub trait Select {
        type Peer: Role;
    }

    pub trait Receive {
        type Peer: Role;
        type Message: Message;
        type Next;
    }

    pub trait Branch {
        type Peer: Role;
        type Choices;
    }

    pub trait Connect {
        type Peer: Role;
        type Next;
    }

    pub trait Accept {
        type Peer: Role;
        type Next;
    }

    pub trait Disconnect {
        type Peer: Role;
        type Next;
    }

    pub trait AwaitDisconnect {
        type Peer: Role;
        type Next;
    }
}

use std::sync::{Arc, Mutex};
use std::time::Duration;

use mpst_runtime::*;
use serde_json::json;

/// Hand-written API in the shape the generator emits, for
/// `Ping(Int) from Client to Server; Pong(Int) from Server to Client;` in a loop
/// that the client ends with `Quit()`.
mod echo {
    use mpst_runtime::{cap, codec, Channel, Choices, CodecError, Initial, Message, Resume, Role, Terminal, Value};

    pub const PROTOCOL: &str = "Echo";

    #[derive(Debug, Clone, PartialEq)]
    pub struct Ping(pub i64);
    #[derive(Debug, Clone, PartialEq)]
    pub struct Pong(pub i64);
    #[derive(Debug, Clone, PartialEq)]
    pub struct Quit;

    impl Message for Ping {
        const LABEL: &'static str = "ping";
        fn to_payload(&self) -> Result<Vec<Value>, CodecError> {
            Ok(vec![codec::encode(&self.0)?])
        }
        fn from_payload(p: Vec<Value>) -> Result<Self, CodecError> {
            let [a] = codec::take::<1>(Self::LABEL, p)?;
            Ok(Ping(codec::decode(Self::LABEL, a)?))
        }
    }
    impl Message for Pong {
        const LABEL: &'static str = "pong";
        fn to_payload(&self) -> Result<Vec<Value>, CodecError> {
            Ok(vec![codec::encode(&self.0)?])
        }
        fn from_payload(p: Vec<Value>) -> Result<Self, CodecError> {
            let [a] = codec::take::<1>(Self::LABEL, p)?;
            Ok(Pong(codec::decode(Self::LABEL, a)?))
        }
    }
    impl Message for Quit {
        const LABEL: &'static str = "quit";
        fn to_payload(&self) -> Result<Vec<Value>, CodecError> {
            Ok(vec![])
        }
        fn from_payload(p: Vec<Value>) -> Result<Self, CodecError> {
            let [] = codec::take::<0>(Self::LABEL, p)?;
            Ok(Quit)
        }
    }

    pub enum Client {}
    impl Role for Client {
        const NAME: &'static str = "Client";
    }
    pub enum Server {}
    impl Role for Server {
        const NAME: &'static str = "Server";
    }

    impl Initial for Client {
        type State = C0;
    }
    impl Terminal for Client {
        type State = C3;
    }
    pub enum C0 {}
    impl cap::Connect for C0 {
        type Peer = Server;
        type Next = C1;
    }
    pub enum C1 {}
    impl cap::Select for C1 {
        type Peer = Server;
    }
    impl cap::Send<Ping> for C1 {
        type Peer = Server;
        type Next = C2;
    }
    impl cap::Send<Quit> for C1 {
        type Peer = Server;
        type Next = C3;
    }
    pub enum C2 {}
    impl cap::Receive for C2 {
        type Peer = Server;
        type Message = Pong;
        type Next = C1;
    }
    pub enum C3 {}

    impl Initial for Server {
        type State = T0;
    }
    impl Terminal for Server {
        type State = T3;
    }
    pub enum T0 {}
    impl cap::Accept for T0 {
        type Peer = Client;
        type Next = T1;
    }
    pub enum T1 {}
    impl cap::Branch for T1 {
        type Peer = Client;
        type Choices = T1Choices;
    }
    pub enum T1Choices {
        Ping(Channel<Server, T1Ping>),
        Quit(Channel<Server, T1Quit>),
    }
    impl Choices<Server> for T1Choices {
        const LABELS: &'static [&'static str] = &["ping", "quit"];
        fn dispatch(label: &str, resume: Resume<Server>) -> Option<Self> {
            match label {
                "ping" => Some(T1Choices::Ping(resume.channel())),
                "quit" => Some(T1Choices::Quit(resume.channel())),
                _ => None,
            }
        }
    }
    pub enum T1Ping {}
    impl cap::Receive for T1Ping {
        type Peer = Client;
        type Message = Ping;
        type Next = T2;
    }
    pub enum T1Quit {}
    impl cap::Receive for T1Quit {
        type Peer = Client;
        type Message = Quit;
        type Next = T3;
    }
    pub enum T2 {}
    impl cap::Send<Pong> for T2 {
        type Peer = Client;
        type Next = T1;
    }
    pub enum T3 {}

    /// Both ends of an empty protocol.
    pub enum Idle {}
    impl Role for Idle {
        const NAME: &'static str = "Idle";
    }
    pub enum I0 {}
    impl Initial for Idle {
        type State = I0;
    }
    impl Terminal for Idle {
        type State = I0;
    }
}

use echo::*;

/// Hands out one prepared connection regardless of address.
struct OneShot(Mutex<Option<MemConnection>>);

impl OneShot {
    fn new(conn: MemConnection) -> Arc<Self> {
        Arc::new(OneShot(Mutex::new(Some(conn))))
    }
}

#[async_trait::async_trait]
impl Dialer for OneShot {
    async fn dial(&self, _: &str) -> Result<Box<dyn Connection>, TransportError> {
        let conn = self.0.lock().unwrap().take().ok_or(TransportError::Closed)?;
        Ok(Box::new(conn))
    }
}

async fn client(addr: String, rounds: i64, config: SessionConfig) -> Result<Vec<i64>, SessionError> {
    session::<Client, _, _, _>(config, |ch| async move {
        let mut ch = ch.connect(&addr).await?;
        let mut got = Vec::new();
        for i in 0..rounds {
            let c = ch.send(Ping(i)).await?;
            let (Pong(n), c) = c.receive().await?;
            got.push(n);
            ch = c;
        }
        let ch = ch.send(Quit).await?;
        Ok((ch, got))
    })
    .await
}

async fn server(config: SessionConfig) -> Result<usize, SessionError> {
    session::<Server, _, _, _>(config, |ch| async move {
        let mut ch = ch.accept().await?;
        let mut served = 0;
        loop {
            match ch.choice().await? {
                T1Choices::Ping(c) => {
                    let (Ping(n), c) = c.receive().await?;
                    ch = c.send(Pong(n * 2)).await?;
                    served += 1;
                }
                T1Choices::Quit(c) => {
                    let (Quit, c) = c.receive().await?;
                    return Ok((c, served));
                }
            }
        }
    })
    .await
}

#[tokio::test]
async fn echo_over_mem() {
    let listener = listen("mem:echo-basic").await.unwrap();
    let srv = tokio::spawn(server(SessionConfig::new(PROTOCOL).acceptor(RoleRouter::new(listener))));
    let got = client("mem:echo-basic".into(), 5, SessionConfig::new(PROTOCOL))
        .await
        .unwrap();
    assert_eq!(got, [0, 2, 4, 6, 8]);
    assert_eq!(srv.await.unwrap().unwrap(), 5);
}

#[tokio::test]
async fn echo_over_websocket() {
    let listener = WsListener::bind("127.0.0.1:0").await.unwrap();
    let url = listener.url();
    let srv = tokio::spawn(server(SessionConfig::new(PROTOCOL).acceptor(RoleRouter::new(listener))));
    let got = client(url, 3, SessionConfig::new(PROTOCOL)).await.unwrap();
    assert_eq!(got, [0, 2, 4]);
    assert_eq!(srv.await.unwrap().unwrap(), 3);
}

#[tokio::test]
async fn pure_session_does_no_io() {
    let v = session::<Idle, _, _, _>(SessionConfig::new("Nothing"), |ch| async move { Ok((ch, 42)) })
        .await
        .unwrap();
    assert_eq!(v, 42);
}

#[tokio::test]
async fn lift_keeps_state() {
    let (mut a, b) = mem_pair();
    let srv = tokio::spawn(async move {
        let hello = a.recv_frame().await.unwrap();
        assert_eq!(Handshake::parse(&hello).unwrap().role, "Client");
        a.send_frame(r#"{"label":"__accept","payload":[]}"#.into())
            .await
            .unwrap();
        let ping = a.recv_frame().await.unwrap();
        assert_eq!(ping, r#"{"label":"ping","payload":[7]}"#);
        a.send_frame(r#"{"label":"pong","payload":[8]}"#.into()).await.unwrap();
        a
    });
    let r = session::<Client, _, _, _>(SessionConfig::new(PROTOCOL).dialer(OneShot::new(b)), |ch| async move {
        let ch = ch.connect("anywhere").await?;
        let (ch, n) = ch.lift(async { 7 }).await;
        let ch = ch.send(Ping(n)).await?;
        let (Pong(m), ch) = ch.receive().await?;
        let ch = ch.send(Quit).await?;
        Ok((ch, m))
    })
    .await
    .unwrap();
    assert_eq!(r, 8);
    srv.await.unwrap();
}

/// Server side driven by hand-written frames from a raw client connection.
async fn raw_server(frames: Vec<&'static str>) -> Result<usize, SessionError> {
    let (mut raw, srv_side) = mem_pair();
    let hello = Handshake {
        protocol: PROTOCOL.into(),
        role: "Client".into(),
    }
    .frame();
    for f in frames {
        raw.send_frame(f.to_string()).await.unwrap();
    }
    raw.close().await.unwrap();
    let acceptor = PreBound::new().bind("Client", Box::new(srv_side), hello);
    let out = server(SessionConfig::new(PROTOCOL).acceptor(acceptor)).await;
    drop(raw);
    out
}

#[tokio::test]
async fn choice_requeues_the_frame() {
    let served = raw_server(vec![
        r#"{"label":"ping","payload":[1]}"#,
        r#"{"label":"ping","payload":[2]}"#,
        r#"{"label":"quit","payload":[]}"#,
    ])
    .await
    .unwrap();
    assert_eq!(served, 2);
}

#[tokio::test]
async fn unknown_branch_label() {
    let err = raw_server(vec![r#"{"label":"stop","payload":[]}"#]).await.unwrap_err();
    assert_eq!(
        err,
        SessionError::Protocol(ProtocolError::UnknownBranchLabel {
            peer: "Client".into(),
            got: "stop".into(),
            expected: vec!["ping".into(), "quit".into()],
        })
    );
}

#[tokio::test]
async fn malformed_payload() {
    let err = raw_server(vec![r#"{"label":"ping","payload":["one"]}"#])
        .await
        .unwrap_err();
    assert!(
        matches!(err, SessionError::Protocol(ProtocolError::Malformed(_))),
        "{err}"
    );
    let err = raw_server(vec![r#"{"label":"ping","payload":[]}"#]).await.unwrap_err();
    assert!(
        matches!(err, SessionError::Protocol(ProtocolError::Malformed(_))),
        "{err}"
    );
}

#[tokio::test]
async fn closed_mid_session() {
    let err = raw_server(vec![r#"{"label":"ping","payload":[1]}"#]).await.unwrap_err();
    assert!(matches!(err, SessionError::Transport(TransportError::Closed)), "{err}");
}

#[tokio::test]
async fn unexpected_label_at_receive() {
    let (mut raw, cli_side) = mem_pair();
    let dialer = OneShot::new(cli_side);
    raw.send_frame(r#"{"label":"__accept","payload":[]}"#.into())
        .await
        .unwrap();
    raw.send_frame(r#"{"label":"quit","payload":[]}"#.into()).await.unwrap();
    let err = client("x".into(), 1, SessionConfig::new(PROTOCOL).dialer(dialer))
        .await
        .unwrap_err();
    assert_eq!(
        err,
        SessionError::Protocol(ProtocolError::UnexpectedLabel {
            peer: "Server".into(),
            got: "quit".into(),
            expected: "pong".into(),
        })
    );
}

#[tokio::test]
async fn binary_frames_are_rejected() {
    let (mut raw, srv_side) = mem_pair();
    raw.send_binary(b"\x00\x01").unwrap();
    let hello = Handshake {
        protocol: PROTOCOL.into(),
        role: "Client".into(),
    }
    .frame();
    let acceptor = PreBound::new().bind("Client", Box::new(srv_side), hello);
    let err = server(SessionConfig::new(PROTOCOL).acceptor(acceptor))
        .await
        .unwrap_err();
    assert_eq!(err, SessionError::Protocol(ProtocolError::BinaryFrame));
}

#[tokio::test]
async fn handshake_is_validated() {
    let listener = listen("mem:echo-handshake").await.unwrap();
    let srv = tokio::spawn(server(SessionConfig::new(PROTOCOL).acceptor(RoleRouter::new(listener))));
    // Right role, wrong protocol.
    let err = client("mem:echo-handshake".into(), 1, SessionConfig::new("Other"))
        .await
        .unwrap_err();
    assert!(
        matches!(err, SessionError::Protocol(ProtocolError::Handshake(_))),
        "{err}"
    );
    let err = srv.await.unwrap().unwrap_err();
    assert!(
        matches!(err, SessionError::Protocol(ProtocolError::Handshake(_))),
        "{err}"
    );
}

#[tokio::test]
async fn refused_without_listener() {
    let err = client("mem:nobody-here".into(), 1, SessionConfig::new(PROTOCOL))
        .await
        .unwrap_err();
    assert!(
        matches!(err, SessionError::Transport(TransportError::Refused(_))),
        "{err}"
    );
    let err = client("ws://127.0.0.1:1/".into(), 1, SessionConfig::new(PROTOCOL))
        .await
        .unwrap_err();
    assert!(
        matches!(err, SessionError::Transport(TransportError::Refused(_))),
        "{err}"
    );
}

#[tokio::test]
async fn receive_timeout() {
    let (_raw, srv_side) = mem_pair();
    let hello = Handshake {
        protocol: PROTOCOL.into(),
        role: "Client".into(),
    }
    .frame();
    let acceptor = PreBound::new().bind("Client", Box::new(srv_side), hello);
    let config = SessionConfig::new(PROTOCOL)
        .acceptor(acceptor)
        .recv_timeout(Duration::from_millis(50));
    let err = server(config).await.unwrap_err();
    assert_eq!(err, SessionError::Timeout { peer: "Client".into() });
}

#[tokio::test]
async fn observer_sees_every_step() {
    let seen: Arc<Mutex<Vec<String>>> = Arc::default();
    let log = seen.clone();
    let obs = Arc::new(move |e: &FrameEvent<'_>| {
        log.lock()
            .unwrap()
            .push(format!("{}:{:?}:{}:{}", e.role, e.direction, e.peer, e.label));
    });
    let listener = listen("mem:echo-observed").await.unwrap();
    let srv = tokio::spawn(server(
        SessionConfig::new(PROTOCOL)
            .acceptor(RoleRouter::new(listener))
            .observer(obs.clone()),
    ));
    client(
        "mem:echo-observed".into(),
        1,
        SessionConfig::new(PROTOCOL).observer(obs),
    )
    .await
    .unwrap();
    srv.await.unwrap().unwrap();
    let mut seen = seen.lock().unwrap().clone();
    seen.sort();
    assert_eq!(
        seen,
        [
            "Client:Inbound:Server:pong",
            "Client:Outbound:Server:__connect",
            "Client:Outbound:Server:ping",
            "Client:Outbound:Server:quit",
            "Server:Inbound:Client:__connect",
            "Server:Inbound:Client:ping",
            "Server:Inbound:Client:quit",
            "Server:Outbound:Client:pong",
        ]
    );
}

#[test]
fn wire_labels_match_messages() {
    assert_eq!(
        Ping(3).to_wire().unwrap().encode(),
        json!({"label": "ping", "payload": [3]}).to_string()
    );
}

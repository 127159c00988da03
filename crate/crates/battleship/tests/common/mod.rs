#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use battleship::bot::Bot;
use battleship::player::{play, GameResult};
use battleship::server::{serve, MatchReport, ServeOptions};
use battleship::{Player, PROTOCOL};
use mpst_core::monitor::{self, Monitor, Observation, Violation};
use mpst_core::{corpus, project, split_labels, to_efsm, Efsm};
use mpst_runtime::{Direction, FrameEvent, MemListener, Observer, SessionConfig, SessionError, WsListener};

pub fn efsm(role: &str) -> Efsm {
    let m = corpus::battleship();
    split_labels(&to_efsm(
        &project(&m, "BattleShips", role).unwrap(),
        "BattleShips",
        role,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub direction: Direction,
    pub peer: String,
    pub label: String,
    pub arity: usize,
    pub raw: String,
}

/// Records every frame an endpoint sends or receives and checks it against
/// the endpoint's state machine.
pub struct Endpoint {
    monitor: Mutex<Monitor>,
    pub violations: Mutex<Vec<Violation>>,
    pub log: Mutex<Vec<Event>>,
}

impl Endpoint {
    pub fn new(role: &str) -> Arc<Self> {
        Arc::new(Endpoint {
            monitor: Mutex::new(Monitor::new(efsm(role))),
            violations: Mutex::new(Vec::new()),
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn finished(&self) -> bool {
        self.monitor.lock().unwrap().is_terminal()
    }

    pub fn violations(&self) -> Vec<Violation> {
        self.violations.lock().unwrap().clone()
    }

    pub fn events(&self) -> Vec<Event> {
        self.log.lock().unwrap().clone()
    }
}

impl Observer for Endpoint {
    fn frame(&self, e: &FrameEvent<'_>) {
        let direction = match e.direction {
            Direction::Outbound => monitor::Direction::Outbound,
            Direction::Inbound => monitor::Direction::Inbound,
        };
        let obs = Observation::new(direction, e.peer, e.label).with_arity(e.arity);
        if let Err(v) = self.monitor.lock().unwrap().observe(&obs) {
            self.violations.lock().unwrap().push(v);
        }
        self.log.lock().unwrap().push(Event {
            direction: e.direction,
            peer: e.peer.to_string(),
            label: e.label.to_string(),
            arity: e.arity,
            raw: e.raw.to_string(),
        });
    }
}

pub struct MatchRun {
    pub report: MatchReport,
    pub p1: GameResult,
    pub p2: GameResult,
    pub server: Arc<Endpoint>,
    pub clients: [Arc<Endpoint>; 2],
}

impl MatchRun {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = self.server.violations();
        for c in &self.clients {
            v.extend(c.violations());
        }
        v
    }

    pub fn all_finished(&self) -> bool {
        self.server.finished() && self.clients.iter().all(|c| c.finished())
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Transport {
    Mem,
    Ws,
}

static NEXT: AtomicUsize = AtomicUsize::new(0);

/// One bot-vs-bot match behind a fresh server, every endpoint monitored.
pub async fn bot_match(transport: Transport, seed1: u64, seed2: u64) -> Result<MatchRun, String> {
    let server = Endpoint::new("GameServer");
    let clients = [Endpoint::new("P1"), Endpoint::new("P2")];
    let opts = ServeOptions {
        max_matches: Some(1),
        recv_timeout: Some(Duration::from_secs(10)),
        observer: Some(server.clone()),
    };
    let (url, serving) = match transport {
        Transport::Mem => {
            let addr = format!("mem:battleship-{}", NEXT.fetch_add(1, Ordering::Relaxed));
            let l = MemListener::bind(&addr).map_err(|e| e.to_string())?;
            (addr, tokio::spawn(serve(l, opts)))
        }
        Transport::Ws => {
            let l = WsListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
            (l.url(), tokio::spawn(serve(l, opts)))
        }
    };
    let client = |role: Player, seed: u64, ep: Arc<Endpoint>| {
        let url = url.clone();
        async move {
            let config = SessionConfig::new(PROTOCOL)
                .observer(ep)
                .recv_timeout(Duration::from_secs(10));
            play(role, config, &url, &mut Bot::new(seed)).await
        }
    };
    let (r1, r2) = tokio::join!(
        client(Player::P1, seed1, clients[0].clone()),
        client(Player::P2, seed2, clients[1].clone())
    );
    let results = serving.await.map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
    let report = match results.as_slice() {
        [Ok(r)] => r.clone(),
        [Err(e)] => return Err(format!("server: {e}")),
        other => return Err(format!("expected one match, got {}", other.len())),
    };
    let err = |e: SessionError| e.to_string();
    Ok(MatchRun {
        report,
        p1: r1.map_err(err)?,
        p2: r2.map_err(err)?,
        server,
        clients,
    })
}

fn other(peer: &str) -> &'static str {
    if peer == "P1" {
        "P2"
    } else {
        "P1"
    }
}

/// Checks the server's trace against the three phases of a match: both
/// players connect, both send Init, then rounds of an Attack answered to the
/// attacker and reported to the defender with the attacked location. Hits keep
/// the turn, misses pass it, and the match ends with one Winner/Loser pair.
pub fn check_phases(events: &[Event]) -> Result<usize, String> {
    let inbound =
        |e: &Event, peer: &str, label: &str| e.direction == Direction::Inbound && e.peer == peer && e.label == label;
    let opening = &events[..4.min(events.len())];
    let expect = [("P1", "__connect"), ("P2", "__connect"), ("P1", "init"), ("P2", "init")];
    if opening.len() < 4 || !opening.iter().zip(expect).all(|(e, (p, l))| inbound(e, p, l)) {
        return Err(format!("opening phase: {opening:?}"));
    }
    let mut rest = &events[4..];
    let mut attacker = "P1";
    let mut rounds = 0;
    let mut winners = 0;
    while !rest.is_empty() {
        let [attack, reply, report, tail @ ..] = rest else {
            return Err(format!("truncated round {rounds}: {rest:?}"));
        };
        if !inbound(attack, attacker, "attack") || attack.arity != 1 {
            return Err(format!(
                "round {rounds}: expected attack from {attacker}, got {attack:?}"
            ));
        }
        let defender = other(attacker);
        if reply.direction != Direction::Outbound || reply.peer != attacker || reply.arity != 0 {
            return Err(format!("round {rounds}: bad reply {reply:?}"));
        }
        let expected_report = match reply.label.as_str() {
            "hit" | "sunk" => "hit",
            "miss" => "miss",
            "winner" => "loser",
            other => return Err(format!("round {rounds}: reply `{other}`")),
        };
        if report.direction != Direction::Outbound
            || report.peer != defender
            || report.label != expected_report
            || report.arity != 1
        {
            return Err(format!("round {rounds}: bad report {report:?}"));
        }
        let loc = |raw: &str| -> Result<serde_json::Value, String> {
            let v: serde_json::Value = serde_json::from_str(raw).map_err(|e| e.to_string())?;
            Ok(v["payload"][0].clone())
        };
        if loc(&attack.raw)? != loc(&report.raw)? {
            return Err(format!("round {rounds}: defender told a different location"));
        }
        rounds += 1;
        match reply.label.as_str() {
            "miss" => attacker = defender,
            "winner" => {
                winners += 1;
                if !tail.is_empty() {
                    return Err(format!("frames after the winner: {tail:?}"));
                }
            }
            _ => {}
        }
        rest = tail;
    }
    if winners != 1 {
        return Err(format!("{winners} winners"));
    }
    Ok(rounds)
}

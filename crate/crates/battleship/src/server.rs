//! The GameServer endpoint and a lobby that pairs incoming players.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Duration;

use mpst_runtime::{
    session, Channel, Connection, Handshake, Listener, Observer, PreBound, SessionConfig, SessionError, TransportError,
};
use tokio::task::JoinSet;

use crate::game::battle_ships_game_server::*;
use crate::game::messages::*;
use crate::model::{validate_config, AttackOutcome, Grid, MatchState, Player, FLEET};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchReport {
    pub winner: Player,
    pub attacks: usize,
}

/// Runs the server side of one match. `config` must carry an acceptor that
/// yields the P1 and P2 connections.
pub async fn run_match(config: SessionConfig) -> Result<MatchReport, SessionError> {
    enum Turn {
        P1(Channel<GameServer, S4>),
        P2(Channel<GameServer, S8>),
    }

    session::<GameServer, _, _, _>(config, |ch| async move {
        let ch = ch.accept().await?;
        let ch = ch.accept().await?;
        let (Init(c1), ch) = ch.receive().await?;
        let (Init(c2), ch) = ch.receive().await?;
        for (p, c) in [(Player::P1, &c1), (Player::P2, &c2)] {
            let v = validate_config(c, Grid::default(), &FLEET);
            if !v.is_empty() {
                let why: Vec<String> = v.iter().map(|v| format!("{}: {v}", v.code())).collect();
                log::warn!("rejecting fleet from {p}: {}", why.join("; "));
                return Err(SessionError::app(format!("invalid fleet from {p}: {}", why.join("; "))));
            }
        }
        let mut state = MatchState::new(c1, c2);
        let mut turn = Turn::P1(ch);
        loop {
            turn = match turn {
                Turn::P1(ch) => {
                    let (Attack(at), ch) = ch.receive().await?;
                    let outcome = state.attack(at);
                    log::debug!("P1 attacks {at}: {outcome:?}");
                    match outcome {
                        AttackOutcome::Hit => Turn::P1(ch.send(Hit).await?.send(HitLocation(at)).await?),
                        AttackOutcome::Sunk => Turn::P1(ch.send(Sunk).await?.send(HitLocation(at)).await?),
                        AttackOutcome::Miss => Turn::P2(ch.send(Miss).await?.send(MissLocation(at)).await?),
                        AttackOutcome::Win => {
                            let end = ch.send(Winner).await?.send(Loser(at)).await?;
                            return Ok((
                                end,
                                MatchReport {
                                    winner: Player::P1,
                                    attacks: state.attacks(),
                                },
                            ));
                        }
                    }
                }
                Turn::P2(ch) => {
                    let (Attack(at), ch) = ch.receive().await?;
                    let outcome = state.attack(at);
                    log::debug!("P2 attacks {at}: {outcome:?}");
                    match outcome {
                        AttackOutcome::Hit => Turn::P2(ch.send(Hit).await?.send(HitLocation(at)).await?),
                        AttackOutcome::Sunk => Turn::P2(ch.send(Sunk).await?.send(HitLocation(at)).await?),
                        AttackOutcome::Miss => Turn::P1(ch.send(Miss).await?.send(MissLocation(at)).await?),
                        AttackOutcome::Win => {
                            let end = ch.send(Winner).await?.send(Loser(at)).await?;
                            return Ok((
                                end,
                                MatchReport {
                                    winner: Player::P2,
                                    attacks: state.attacks(),
                                },
                            ));
                        }
                    }
                }
            };
        }
    })
    .await
}

#[derive(Clone, Default)]
pub struct ServeOptions {
    /// Stop accepting after this many matches have been paired.
    pub max_matches: Option<usize>,
    pub recv_timeout: Option<Duration>,
    pub observer: Option<Arc<dyn Observer>>,
}

type Pending = VecDeque<(Box<dyn Connection>, String)>;

/// Accepts players, pairs the first waiting P1 with the first waiting P2 and
/// runs each match in its own task. Returns the match results once
/// `max_matches` have finished, or on a listener error.
pub async fn serve(
    mut listener: impl Listener,
    opts: ServeOptions,
) -> Result<Vec<Result<MatchReport, SessionError>>, TransportError> {
    let mut waiting: [Pending; 2] = Default::default();
    let mut matches = JoinSet::new();
    let mut paired = 0;
    let mut results = Vec::new();
    while opts.max_matches.is_none_or(|n| paired < n) {
        let (mut conn, first) = tokio::select! {
            accepted = listener.accept() => accepted?,
            Some(done) = matches.join_next(), if !matches.is_empty() => {
                results.push(done.expect("match task panicked"));
                continue;
            }
        };
        let slot = match Handshake::parse(&first) {
            Ok(h) if h.protocol == PROTOCOL && h.role == "P1" => 0,
            Ok(h) if h.protocol == PROTOCOL && h.role == "P2" => 1,
            Ok(h) => {
                log::warn!("refusing {} in {}", h.role, h.protocol);
                let _ = conn.close().await;
                continue;
            }
            Err(e) => {
                log::warn!("refusing connection: {e}");
                let _ = conn.close().await;
                continue;
            }
        };
        waiting[slot].push_back((conn, first));
        if waiting.iter().all(|q| !q.is_empty()) {
            let (c1, f1) = waiting[0].pop_front().unwrap();
            let (c2, f2) = waiting[1].pop_front().unwrap();
            let mut config =
                SessionConfig::new(PROTOCOL).acceptor(PreBound::new().bind("P1", c1, f1).bind("P2", c2, f2));
            if let Some(t) = opts.recv_timeout {
                config = config.recv_timeout(t);
            }
            if let Some(o) = &opts.observer {
                config = config.observer(o.clone());
            }
            paired += 1;
            log::info!("match {paired} starting");
            matches.spawn(async move {
                let r = run_match(config).await;
                match &r {
                    Ok(m) => log::info!("{} wins after {} attacks", m.winner, m.attacks),
                    Err(e) => log::warn!("match aborted: {e}"),
                }
                r
            });
        }
    }
    while let Some(done) = matches.join_next().await {
        results.push(done.expect("match task panicked"));
    }
    Ok(results)
}

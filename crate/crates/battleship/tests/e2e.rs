mod common;

use std::time::Duration;

use battleship::bot::Bot;
use battleship::model::{Config, Location};
use battleship::player::{play, GameResult};
use battleship::server::{run_match, serve, ServeOptions};
use battleship::{Player, PROTOCOL};
use common::*;
use mpst_runtime::{MemListener, RoleRouter, SessionConfig, SessionError};

#[tokio::test]
async fn bots_finish_over_mem() {
    for seed in 0..20 {
        let run = bot_match(Transport::Mem, seed, seed + 1000).await.unwrap();
        assert_eq!(run.violations(), vec![], "seed {seed}");
        assert!(run.all_finished(), "seed {seed}");
        let won = match run.report.winner {
            Player::P1 => (GameResult::Won, GameResult::Lost),
            Player::P2 => (GameResult::Lost, GameResult::Won),
        };
        assert_eq!((run.p1, run.p2), won, "seed {seed}");
        let rounds = check_phases(&run.server.events()).unwrap();
        assert_eq!(rounds, run.report.attacks);
        assert!(rounds <= 200);
    }
}

#[tokio::test]
async fn bots_finish_over_websocket() {
    let run = bot_match(Transport::Ws, 1, 2).await.unwrap();
    assert_eq!(run.violations(), vec![]);
    assert!(run.all_finished());
    check_phases(&run.server.events()).unwrap();
}

#[tokio::test]
async fn transports_give_identical_traces() {
    for seed in [3, 4] {
        let mem = bot_match(Transport::Mem, seed, seed + 1).await.unwrap();
        let ws = bot_match(Transport::Ws, seed, seed + 1).await.unwrap();
        let raw = |r: &MatchRun, i: usize| {
            let ep = if i == 0 { &r.server } else { &r.clients[i - 1] };
            ep.events().into_iter().map(|e| e.raw).collect::<Vec<_>>()
        };
        for i in 0..3 {
            assert_eq!(raw(&mem, i), raw(&ws, i), "seed {seed} endpoint {i}");
        }
    }
}

#[tokio::test]
async fn first_round_matches_the_message_pattern() {
    let run = bot_match(Transport::Mem, 11, 12).await.unwrap();
    let labels: Vec<(String, String)> = run.server.events()[..7]
        .iter()
        .map(|e| (e.peer.clone(), e.label.clone()))
        .collect();
    let pair = |p: &str, l: &str| (p.to_string(), l.to_string());
    assert_eq!(
        labels[..5],
        [
            pair("P1", "__connect"),
            pair("P2", "__connect"),
            pair("P1", "init"),
            pair("P2", "init"),
            pair("P1", "attack"),
        ]
    );
    assert!(["hit", "miss", "sunk"].contains(&labels[5].1.as_str()));
    assert_eq!(labels[6].0, "P2");
    let first = &run.server.events()[5];
    // Attacker hears no coordinates, the defender does.
    assert!(first.raw.ends_with("\"payload\":[]}"), "{}", first.raw);
}

#[tokio::test]
async fn both_outcomes_occur() {
    let mut hits = 0;
    let mut misses = 0;
    for seed in 0..5 {
        let run = bot_match(Transport::Mem, seed, seed + 50).await.unwrap();
        for e in run.server.events() {
            match e.label.as_str() {
                "hit" if e.arity == 0 => hits += 1,
                "miss" if e.arity == 0 => misses += 1,
                _ => {}
            }
        }
    }
    assert!(hits > 0 && misses > 0);
}

#[tokio::test]
async fn invalid_fleets_are_rejected_before_play() {
    let addr = "mem:battleship-invalid";
    let l = MemListener::bind(addr).unwrap();
    let server = Endpoint::new("GameServer");
    let serving = tokio::spawn(serve(
        l,
        ServeOptions {
            max_matches: Some(1),
            recv_timeout: Some(Duration::from_secs(5)),
            observer: Some(server.clone()),
        },
    ));
    let bad = || Config {
        ships: vec![vec![Location::new(0, 0), Location::new(1, 1)]],
    };
    let cfg = || SessionConfig::new(PROTOCOL).recv_timeout(Duration::from_secs(5));
    let (mut b1, mut b2) = (Bot::with_fleet(1, bad()), Bot::with_fleet(2, bad()));
    let (r1, r2) = tokio::join!(
        play(Player::P1, cfg(), addr, &mut b1),
        play(Player::P2, cfg(), addr, &mut b2)
    );
    assert!(r1.is_err() && r2.is_err());
    let results = serving.await.unwrap().unwrap();
    match &results[..] {
        [Err(SessionError::Application(why))] => assert!(why.contains("invalid fleet from P1"), "{why}"),
        other => panic!("{other:?}"),
    }
    // Nothing past the two Init frames.
    assert_eq!(server.events().len(), 4);
    assert_eq!(server.violations(), vec![]);
}

#[tokio::test]
async fn lobby_pairs_players_in_arrival_order() {
    let addr = "mem:battleship-lobby";
    let l = MemListener::bind(addr).unwrap();
    let serving = tokio::spawn(serve(
        l,
        ServeOptions {
            max_matches: Some(3),
            ..ServeOptions::default()
        },
    ));
    let mut games = Vec::new();
    for i in 0..3u64 {
        games.push(tokio::spawn(async move {
            play(Player::P2, SessionConfig::new(PROTOCOL), addr, &mut Bot::new(100 + i)).await
        }));
        games.push(tokio::spawn(async move {
            play(Player::P1, SessionConfig::new(PROTOCOL), addr, &mut Bot::new(200 + i)).await
        }));
    }
    let mut won = 0;
    for g in games {
        if g.await.unwrap().unwrap() == GameResult::Won {
            won += 1;
        }
    }
    assert_eq!(won, 3);
    let results = serving.await.unwrap().unwrap();
    assert_eq!(results.len(), 3);
    assert!(results.iter().all(Result::is_ok));
}

#[tokio::test]
async fn run_match_with_role_router() {
    let addr = "mem:battleship-router";
    let l = MemListener::bind(addr).unwrap();
    let server = tokio::spawn(run_match(SessionConfig::new(PROTOCOL).acceptor(RoleRouter::new(l))));
    // P2 arrives first and is parked until P1 shows up.
    let p2 = tokio::spawn(async move { play(Player::P2, SessionConfig::new(PROTOCOL), addr, &mut Bot::new(5)).await });
    tokio::time::sleep(Duration::from_millis(20)).await;
    let p1 = play(Player::P1, SessionConfig::new(PROTOCOL), addr, &mut Bot::new(6))
        .await
        .unwrap();
    let p2 = p2.await.unwrap().unwrap();
    assert_ne!(p1, p2);
    server.await.unwrap().unwrap();
}

#[tokio::test]
async fn server_refuses_other_protocol() {
    // A server expecting another protocol refuses the handshake.
    let addr = "mem:battleship-wrong";
    let l = MemListener::bind(addr).unwrap();
    let server = tokio::spawn(run_match(SessionConfig::new("Other").acceptor(RoleRouter::new(l))));
    let r = play(Player::P1, SessionConfig::new(PROTOCOL), addr, &mut Bot::new(1)).await;
    assert!(r.is_err());
    assert!(server.await.unwrap().is_err());
}

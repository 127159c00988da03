//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use battleship::game::messages::*;
use battleship::model::{Config, Location};
use common::{bot_match, check_phases, Transport};
use mpst_core::codegen::{compile_fail_corpus, gate_library, p2_client_skeleton};
use mpst_core::compose::{compose_check, Outcome};
use mpst_core::efsm::{Action, StateKind};
use mpst_core::validate::{check_well_formed, Severity};
use mpst_core::*;
use mpst_runtime::{mem_pair, ws, Connection, Message, WireMessage, WsListener};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokio::runtime::Runtime;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn corpus_validity(_: &Runtime) -> Verdict {
    let start = Instant::now();
    for (name, src) in corpus::VALID {
        let m = parse_module(src).map_err(|e| format!("{name}: {e}"))?;
        let errors: Vec<_> = check_well_formed(&m)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        ensure(errors.is_empty(), || format!("{name}: {errors:?}"))?;
    }
    for (name, src, code) in corpus::INVALID {
        let m = parse_module(src).map_err(|e| format!("{name}: {e}"))?;
        let codes: Vec<&str> = check_well_formed(&m)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.code)
            .collect();
        ensure(codes == [*code], || format!("{name}: expected [{code}], got {codes:?}"))?;
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!(
        "{} modules accepted, {} rejected with their codes",
        corpus::VALID.len(),
        corpus::INVALID.len()
    ))
}

fn fig3_reproduction(_: &Runtime) -> Verdict {
    let golden_text =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/battle_ships_p2.json"))
            .map_err(|e| e.to_string())?;
    let golden = import_efsm_json(&golden_text).map_err(|e| e.to_string())?;

    // The golden file itself has the expected opening.
    let only = |s| -> Result<efsm::Transition, String> {
        let outs: Vec<_> = golden.outgoing(s).cloned().collect();
        match outs.as_slice() {
            [t] => Ok(t.clone()),
            _ => Err(format!("{s} has {} transitions", outs.len())),
        }
    };
    let connect = only(golden.initial)?;
    ensure(
        connect.action == Action::Connect && connect.peer == "GameServer",
        || format!("{connect:?}"),
    )?;
    let init = only(connect.to)?;
    ensure(
        init.action == Action::Send && init.label == "Init" && init.payloads == ["Config"],
        || format!("{init:?}"),
    )?;
    let branch: Vec<_> = golden.outgoing(init.to).cloned().collect();
    let mut labels: Vec<String> = branch.iter().map(|t| t.label.to_lowercase()).collect();
    labels.sort();
    ensure(labels == ["hit", "loser", "miss"], || {
        format!("branch labels {labels:?}")
    })?;
    ensure(golden.kind(init.to) == Some(StateKind::Input), || {
        "branch is not an input state".into()
    })?;
    for t in &branch {
        let next = only(t.to)?;
        ensure(
            next.action == Action::Receive && next.label == t.label && next.payloads == ["Location"],
            || format!("{} continues with {next:?}", t.label),
        )?;
    }

    // And the projection matches it up to state numbering.
    let m = corpus::battleship();
    let lt = project(&m, "BattleShips", "P2").map_err(|e| e.to_string())?;
    let ours = split_labels(&to_efsm(&lt, "BattleShips", "P2"));
    ensure(ours.canonical() == golden.canonical(), || {
        "projection differs from the golden EFSM".into()
    })?;
    equivalent_to_depth(&ours, &golden, 64)?;
    equivalent_to_depth(&golden, &ours, 64)?;
    Ok(format!(
        "connect, send Init, branch {{{}}}; {} states isomorphic to golden",
        labels.join(", "),
        golden.states.len()
    ))
}

fn corpus_efsms() -> Result<Vec<(String, Efsm)>, String> {
    let mut out = Vec::new();
    for (name, src) in corpus::VALID {
        let m = parse_module(src).map_err(|e| e.to_string())?;
        for p in &m.protocols {
            for role in &p.role_params {
                let lt = project(&m, p.name.as_str(), role.as_str()).map_err(|e| format!("{name} {role}: {e}"))?;
                out.push((
                    format!("{name} {}@{role}", p.name),
                    to_efsm(&lt, p.name.as_str(), role.as_str()),
                ));
            }
        }
    }
    Ok(out)
}

fn efsm_invariants(_: &Runtime) -> Verdict {
    let start = Instant::now();
    let all = corpus_efsms()?;
    for (what, e) in &all {
        let s = split_labels(e);
        let v = s.check_invariants();
        ensure(v.is_empty(), || format!("{what}: {v:?}"))?;
        ensure(split_labels(&s) == s, || format!("{what}: split is not idempotent"))?;
        equivalent_to_depth(e, &s, 12).map_err(|d| format!("{what}: {d}"))?;
        equivalent_to_depth(&s, e, 12).map_err(|d| format!("{what}: {d}"))?;
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!(
        "{} role machines, split idempotent and equivalent to depth 12",
        all.len()
    ))
}

fn composition(_: &Runtime) -> Verdict {
    let start = Instant::now();
    let mut checked = 0;
    let mut largest = 0;
    for (name, src) in corpus::VALID {
        let m = parse_module(src).map_err(|e| e.to_string())?;
        for p in &m.protocols {
            let r = compose_check(&m, p.name.as_str(), 1).map_err(|e| format!("{name} {}: {e}", p.name))?;
            ensure(r.result.is_ok(), || format!("{name} {}: {:?}", p.name, r.result))?;
            ensure(r.explored_states < 100_000, || {
                format!("{name} {}: {} states", p.name, r.explored_states)
            })?;
            largest = largest.max(r.explored_states);
            checked += 1;
        }
    }
    within(Duration::from_secs(10), start)?;

    let mutated = corpus::BATTLESHIP.replacen("choice at Svr {", "choice at Atk {", 1);
    ensure(mutated != corpus::BATTLESHIP, || "mutation anchor missing".into())?;
    let m = parse_module(&mutated).map_err(|e| e.to_string())?;
    let caught = match compose_check(&m, "BattleShips", 1) {
        Err(e) => format!("projection fails ({e})"),
        Ok(r) => match r.result {
            Outcome::Ok => return Err("mutated choice sender went unnoticed".into()),
            other => format!("{} reported", other.name()),
        },
    };
    Ok(format!(
        "{checked} protocols ok (largest {largest} states); mutated choice sender: {caught}"
    ))
}

fn compile_gate(_: &Runtime) -> Verdict {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("compile-gate");
    let _ = std::fs::remove_dir_all(dir.join("src"));
    let art = gate_library(&corpus::battleship()).map_err(|e| e.to_string())?;
    art.write_to(&dir).map_err(|e| e.to_string())?;
    let runtime = Path::new(env!("CARGO_MANIFEST_DIR")).join("../runtime");
    let manifest = format!(
        "[package]\nname = \"gate\"\nversion = \"0.0.0\"\nedition = \"2021\"\npublish = false\n\n\
         [dependencies]\nmpst-runtime = {{ path = {:?} }}\nserde = {{ version = \"1\", features = [\"derive\"] }}\n\n[workspace]\n",
        runtime.canonicalize().map_err(|e| e.to_string())?
    );
    let write = |rel: &str, text: &str| {
        let p = dir.join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).and_then(|_| std::fs::write(p, text))
    };
    write("Cargo.toml", &manifest).map_err(|e| e.to_string())?;
    let lock = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../Cargo.lock");
    if lock.exists() {
        std::fs::copy(&lock, dir.join("Cargo.lock")).map_err(|e| e.to_string())?;
    }
    write("src/bin/p2_client.rs", &p2_client_skeleton()).map_err(|e| e.to_string())?;
    let cases = compile_fail_corpus();
    for c in &cases {
        write(&format!("src/bin/{}.rs", c.name), &c.program).map_err(|e| e.to_string())?;
    }

    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let out = Command::new(cargo)
        .args([
            "check",
            "--offline",
            "--keep-going",
            "--message-format=json",
            "--lib",
            "--bins",
        ])
        .current_dir(&dir)
        .env("CARGO_TARGET_DIR", dir.join("target"))
        .env_remove("RUSTFLAGS")
        .output()
        .map_err(|e| format!("running cargo: {e}"))?;

    // Error codes per target.
    let mut errors: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for line in String::from_utf8_lossy(&out.stdout).lines() {
        let Ok(v) = serde_json::from_str::<serde_json::Value>(line) else {
            continue;
        };
        if v["reason"] != "compiler-message" || v["message"]["level"] != "error" {
            continue;
        }
        let target = v["target"]["name"].as_str().unwrap_or("?").to_string();
        let code = v["message"]["code"]["code"].as_str().unwrap_or("none").to_string();
        errors.entry(target).or_default().push(code);
    }
    for clean in ["gate", "p2_client"] {
        ensure(!errors.contains_key(clean), || {
            format!(
                "{clean} does not compile: {:?}\n{}",
                errors.get(clean),
                String::from_utf8_lossy(&out.stderr)
            )
        })?;
    }
    ensure(!out.stdout.is_empty(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    for c in &cases {
        let got = errors.get(c.name).cloned().unwrap_or_default();
        ensure(!got.is_empty(), || format!("{} ({}) compiled", c.name, c.reason))?;
        ensure(c.expected.contains(&got[0].as_str()), || {
            format!("{} rejected with {got:?}, expected one of {:?}", c.name, c.expected)
        })?;
    }
    let summary: Vec<String> = cases
        .iter()
        .map(|c| format!("{}={}", c.name, errors[c.name][0]))
        .collect();
    Ok(format!(
        "3 role APIs and the P2 client compile; {} rejected: {}",
        cases.len(),
        summary.join(" ")
    ))
}

fn end_to_end(rt: &Runtime) -> Verdict {
    let start = Instant::now();
    rt.block_on(async {
        let mut runs = tokio::task::JoinSet::new();
        for seed in 0..100u64 {
            runs.spawn(async move {
                (
                    Transport::Mem,
                    seed,
                    bot_match(Transport::Mem, seed, seed + 10_000).await,
                )
            });
        }
        for seed in 0..10u64 {
            runs.spawn(async move { (Transport::Ws, seed, bot_match(Transport::Ws, seed, seed + 10_000).await) });
        }
        let mut count = [0usize; 2];
        let mut attacks = 0;
        while let Some(done) = runs.join_next().await {
            let (t, seed, run) = done.map_err(|e| e.to_string())?;
            let run = run.map_err(|e| format!("{t:?} seed {seed}: {e}"))?;
            let v = run.violations();
            ensure(v.is_empty(), || format!("{t:?} seed {seed}: {}", v[0]))?;
            ensure(run.all_finished(), || {
                format!("{t:?} seed {seed}: an endpoint stopped early")
            })?;
            ensure(run.p1 != run.p2, || {
                format!("{t:?} seed {seed}: both players got {:?}", run.p1)
            })?;
            let events = run.server.events();
            let winners = events.iter().filter(|e| e.label == "winner").count();
            let losers = events.iter().filter(|e| e.label == "loser").count();
            ensure(winners == 1 && losers == 1, || {
                format!("{t:?} seed {seed}: {winners} winner, {losers} loser frames")
            })?;
            let rounds = check_phases(&events).map_err(|e| format!("{t:?} seed {seed}: {e}"))?;
            attacks += rounds;
            count[matches!(t, Transport::Ws) as usize] += 1;
        }
        Ok::<_, String>((count, attacks))
    })
    .and_then(|(count, attacks)| {
        within(Duration::from_secs(60), start)?;
        Ok(format!(
            "{} mem + {} WebSocket matches, {attacks} attacks, no monitor violations",
            count[0], count[1]
        ))
    })
}

fn round_trip<M: Message + PartialEq + Debug>(m: M) -> Result<(), String> {
    let text = m.to_wire().map_err(|e| e.to_string())?.encode();
    let back = WireMessage::decode(&text).map_err(|e| e.to_string())?;
    let back = M::from_wire(back).map_err(|e| e.to_string())?;
    ensure(back == m, || format!("{m:?} came back as {back:?}"))
}

async fn ordered(mut a: Box<dyn Connection>, mut b: Box<dyn Connection>, n: usize) -> Result<(), String> {
    let writer = tokio::spawn(async move {
        for i in 0..n {
            a.send_frame(format!("{{\"seq\":{i}}}"))
                .await
                .map_err(|e| e.to_string())?;
        }
        Ok::<_, String>(a)
    });
    for i in 0..n {
        let f = b.recv_frame().await.map_err(|e| e.to_string())?;
        ensure(f == format!("{{\"seq\":{i}}}"), || format!("frame {i} was {f}"))?;
    }
    let mut a = writer.await.map_err(|e| e.to_string())??;
    let _ = a.close().await;
    Ok(())
}

fn wire_properties(rt: &Runtime) -> Verdict {
    const N: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let loc = |rng: &mut ChaCha8Rng| Location::new(rng.random(), rng.random());
    for _ in 0..N {
        let ships = (0..rng.random_range(0..6))
            .map(|_| (0..rng.random_range(0..6)).map(|_| loc(&mut rng)).collect())
            .collect();
        round_trip(Init(Config { ships }))?;
        round_trip(Attack(loc(&mut rng)))?;
        round_trip(HitLocation(loc(&mut rng)))?;
        round_trip(MissLocation(loc(&mut rng)))?;
        round_trip(Loser(loc(&mut rng)))?;
        round_trip(Hit)?;
        round_trip(Miss)?;
        round_trip(Sunk)?;
        round_trip(Winner)?;
    }
    rt.block_on(async {
        let (a, b) = mem_pair();
        ordered(Box::new(a), Box::new(b), N).await?;
        let mut l = WsListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let url = l.url();
        let server = tokio::spawn(async move { l.accept_raw().await });
        let client = ws::dial(&url).await.map_err(|e| e.to_string())?;
        let server = server.await.map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
        ordered(Box::new(client), Box::new(server), N).await
    })?;
    Ok(format!(
        "{N} round trips for each of 9 message types; {N} ordered frames over mem and WebSocket"
    ))
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    let criteria: [(&str, fn(&Runtime) -> Verdict); 7] = [
        ("corpus validity", corpus_validity),
        ("projection of P2 matches golden EFSM", fig3_reproduction),
        ("EFSM invariants", efsm_invariants),
        ("composition oracle", composition),
        ("compilation gate", compile_gate),
        ("end-to-end matches", end_to_end),
        ("wire properties", wire_properties),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(AssertUnwindSafe(|| check(&rt))).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        let took = start.elapsed();
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{took:.2?}]");
            }
        }
    }
    println!("{} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

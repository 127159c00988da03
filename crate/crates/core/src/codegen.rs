//! Rust typestate API and message codec generation.
//!
//! Each EFSM state becomes an uninhabited type; what may happen in a state is
//! expressed as trait impls from `mpst_runtime` whose associated types name the
//! peer, message and successor. Since a type can implement a trait at most once,
//! every (state, capability) pair has exactly one successor.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;
use std::path::Path;

use serde::Deserialize;

use crate::ast::ScribbleModule;
use crate::efsm::{split_labels, to_efsm, Action, Efsm, InvariantViolation, StateId, StateKind, Transition};
use crate::project::{project, ProjectError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodegenError {
    #[error("payload type `{0}` has no import mapping")]
    UnknownAlias(String),
    #[error("state {state} has two transitions labelled `{label}`")]
    Nondeterministic { state: StateId, label: String },
    #[error("invalid EFSM: {0:?}")]
    InvalidEfsm(Vec<InvariantViolation>),
    #[error("no message type for `{label}({})`", payloads.join(", "))]
    UnknownMessage { label: String, payloads: Vec<String> },
    #[error("state {state}: {what} cannot be a branch alternative")]
    Unsupported { state: StateId, what: String },
    #[error("generated name `{0}` is used twice")]
    NameClash(String),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("bad import map: {0}")]
    ImportMap(String),
}

/// Relative path → file contents, plus the names a caller is likely to need.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneratedArtifact {
    pub files: BTreeMap<String, String>,
    pub states: Vec<String>,
    pub roles: Vec<String>,
    pub messages: Vec<String>,
}

impl GeneratedArtifact {
    pub fn merge(&mut self, other: GeneratedArtifact) {
        self.files.extend(other.files);
        self.states.extend(other.states);
        for r in other.roles {
            if !self.roles.contains(&r) {
                self.roles.push(r);
            }
        }
        self.messages.extend(other.messages);
    }

    /// Writes every file below `dir`, creating directories as needed.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        for (rel, text) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[derive(Debug, Clone)]
pub struct ApiOptions {
    /// Directory (relative, `/`-separated) the files are placed in.
    pub module_name: String,
    /// Path from a role file to the messages module.
    pub messages_path: String,
    pub runtime_path: String,
}

impl ApiOptions {
    pub fn new(module_name: impl Into<String>) -> Self {
        ApiOptions {
            module_name: module_name.into(),
            messages_path: "super::messages".into(),
            runtime_path: "::mpst_runtime".into(),
        }
    }

    pub fn for_module(m: &ScribbleModule) -> Self {
        let dir = m.name.iter().map(|i| snake_case(&i.name)).collect::<Vec<_>>().join("/");
        Self::new(dir)
    }
}

/// `{"aliases": {"Location": "crate::model::Location"}}`
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct ImportMap {
    pub aliases: BTreeMap<String, String>,
}

impl ImportMap {
    pub fn from_json(text: &str) -> Result<Self, CodegenError> {
        serde_json::from_str(text).map_err(|e| CodegenError::ImportMap(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageDef {
    /// Rust type name.
    pub name: String,
    pub label: String,
    pub payloads: Vec<String>,
}

impl MessageDef {
    pub fn wire_label(&self) -> String {
        self.label.to_ascii_lowercase()
    }
}

/// Every distinct `label(payloads)` signature in a module, with its type name.
/// A label used with one signature keeps its own name. A label used with several
/// gives the empty signature the bare name and appends the payload aliases
/// for the others (`Hit`, `HitLocation`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MessageCatalog {
    pub messages: Vec<MessageDef>,
}

impl MessageCatalog {
    pub fn from_module(m: &ScribbleModule) -> Self {
        use crate::ast::GlobalStatement;
        fn walk(stmts: &[GlobalStatement], out: &mut Vec<(String, Vec<String>)>) {
            for s in stmts {
                match s {
                    GlobalStatement::Transfer { label, payloads, .. } => {
                        let sig = (label.name.clone(), payloads.iter().map(|p| p.name.clone()).collect());
                        if !out.contains(&sig) {
                            out.push(sig);
                        }
                    }
                    GlobalStatement::Choice { branches, .. } => {
                        for b in branches {
                            walk(b, out);
                        }
                    }
                    _ => {}
                }
            }
        }
        let mut sigs = Vec::new();
        for p in &m.protocols {
            walk(&p.body, &mut sigs);
        }
        let mut per_label: BTreeMap<&str, usize> = BTreeMap::new();
        for (label, _) in &sigs {
            *per_label.entry(label.as_str()).or_default() += 1;
        }
        let mut taken = BTreeSet::new();
        let mut messages = Vec::new();
        for (label, payloads) in &sigs {
            let mut name = if per_label[label.as_str()] == 1 || payloads.is_empty() {
                label.clone()
            } else {
                format!("{label}{}", payloads.concat())
            };
            while !taken.insert(name.clone()) {
                name.push('_');
            }
            messages.push(MessageDef {
                name,
                label: label.clone(),
                payloads: payloads.clone(),
            });
        }
        MessageCatalog { messages }
    }

    pub fn lookup(&self, label: &str, payloads: &[String]) -> Option<&MessageDef> {
        self.messages
            .iter()
            .find(|m| m.label == label && m.payloads == payloads)
    }
}

pub fn snake_case(s: &str) -> String {
    let mut out = String::new();
    let mut prev: Option<char> = None;
    for c in s.chars() {
        if c.is_ascii_uppercase() {
            if matches!(prev, Some(p) if p.is_ascii_lowercase() || p.is_ascii_digit()) {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
        prev = Some(c);
    }
    out
}

/// File name (without directory) of the API for one role.
pub fn api_file_name(protocol: &str, role: &str) -> String {
    format!("{}_{}.rs", snake_case(protocol), snake_case(role))
}

fn resolve(m: &ScribbleModule, imports: Option<&ImportMap>, alias: &str) -> Result<String, CodegenError> {
    match imports {
        Some(map) => map
            .aliases
            .get(alias)
            .cloned()
            .ok_or_else(|| CodegenError::UnknownAlias(alias.to_string())),
        None => m
            .type_decl(alias)
            .map(|d| d.target_path.replace('.', "::"))
            .ok_or_else(|| CodegenError::UnknownAlias(alias.to_string())),
    }
}

/// Message records with JSON codecs for every signature in `m`, written to
/// `<module>/messages.rs`.
pub fn generate_message_types(
    m: &ScribbleModule,
    imports: Option<&ImportMap>,
    opts: &ApiOptions,
) -> Result<GeneratedArtifact, CodegenError> {
    let rt = &opts.runtime_path;
    let catalog = MessageCatalog::from_module(m);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "// Message types for `{}`. Generated, do not edit.",
        m.module_name()
    );
    for msg in &catalog.messages {
        let types = msg
            .payloads
            .iter()
            .map(|p| resolve(m, imports, p))
            .collect::<Result<Vec<_>, _>>()?;
        let n = types.len();
        out.push('\n');
        let _ = writeln!(out, "/// `{}({})`", msg.label, msg.payloads.join(", "));
        out.push_str("#[derive(Debug, Clone, PartialEq)]\n");
        if types.is_empty() {
            let _ = writeln!(out, "pub struct {};", msg.name);
        } else {
            let fields = types.iter().map(|t| format!("pub {t}")).collect::<Vec<_>>().join(", ");
            let _ = writeln!(out, "pub struct {}({});", msg.name, fields);
        }
        out.push('\n');
        let _ = writeln!(out, "impl {rt}::Message for {} {{", msg.name);
        let _ = writeln!(out, "    const LABEL: &'static str = {:?};", msg.wire_label());
        out.push('\n');
        if n == 0 {
            let _ = writeln!(
                out,
                "    fn to_payload(&self) -> ::std::result::Result<::std::vec::Vec<{rt}::Value>, {rt}::CodecError> {{\n        Ok(::std::vec::Vec::new())\n    }}"
            );
        } else {
            let items = (0..n)
                .map(|i| format!("{rt}::codec::encode(&self.{i})?"))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(
                out,
                "    fn to_payload(&self) -> ::std::result::Result<::std::vec::Vec<{rt}::Value>, {rt}::CodecError> {{\n        Ok(vec![{items}])\n    }}"
            );
        }
        out.push('\n');
        let vars = (0..n).map(|i| format!("p{i}")).collect::<Vec<_>>();
        let _ = writeln!(
            out,
            "    fn from_payload(payload: ::std::vec::Vec<{rt}::Value>) -> ::std::result::Result<Self, {rt}::CodecError> {{"
        );
        let _ = writeln!(
            out,
            "        let [{}] = {rt}::codec::take::<{n}>(Self::LABEL, payload)?;",
            vars.join(", ")
        );
        if n == 0 {
            let _ = writeln!(out, "        Ok({})", msg.name);
        } else {
            let args = vars
                .iter()
                .map(|v| format!("{rt}::codec::decode(Self::LABEL, {v})?"))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "        Ok({}({args}))", msg.name);
        }
        out.push_str("    }\n}\n");
    }
    let mut art = GeneratedArtifact::default();
    art.files.insert(format!("{}/messages.rs", opts.module_name), out);
    art.messages = catalog.messages.iter().map(|m| m.name.clone()).collect();
    Ok(art)
}

fn state_names(e: &Efsm) -> HashMap<StateId, String> {
    let mut names: HashMap<StateId, String> = e.states.iter().map(|s| (s.id, s.id.to_string())).collect();
    for t in e.transitions.iter().filter(|t| t.selection) {
        names.insert(t.to, format!("{}{}", t.from, t.label));
    }
    names
}

fn describe(t: &Transition) -> String {
    crate::efsm::edge_label(t)
}

/// Typestate API for one role, written to `<module>/<protocol>_<role>.rs`.
/// The EFSM is label-split first (a no-op if it already is).
pub fn generate_api(e: &Efsm, catalog: &MessageCatalog, opts: &ApiOptions) -> Result<GeneratedArtifact, CodegenError> {
    let e = split_labels(e);
    let violations = e.check_invariants();
    if let Some(InvariantViolation::Nondeterministic { state, label }) = violations
        .iter()
        .find(|v| matches!(v, InvariantViolation::Nondeterministic { .. }))
    {
        return Err(CodegenError::Nondeterministic {
            state: *state,
            label: label.clone(),
        });
    }
    if !violations.is_empty() {
        return Err(CodegenError::InvalidEfsm(violations));
    }
    let rt = &opts.runtime_path;
    let cap = format!("{rt}::cap");
    let msgs = &opts.messages_path;
    let names = state_names(&e);
    let me = &e.role;

    let mut roles = vec![me.clone()];
    for t in &e.transitions {
        if !roles.contains(&t.peer) {
            roles.push(t.peer.clone());
        }
    }
    roles[1..].sort();

    let mut states: Vec<StateId> = e.states.iter().map(|s| s.id).collect();
    states.sort();

    let mut used = BTreeSet::new();
    for n in roles.iter().chain(names.values()) {
        if !used.insert(n.clone()) {
            return Err(CodegenError::NameClash(n.clone()));
        }
    }
    let choices_name = |s: StateId| format!("{}Choices", names[&s]);

    let message = |t: &Transition| -> Result<String, CodegenError> {
        catalog
            .lookup(&t.label, &t.payloads)
            .map(|m| format!("{msgs}::{}", m.name))
            .ok_or_else(|| CodegenError::UnknownMessage {
                label: t.label.clone(),
                payloads: t.payloads.clone(),
            })
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "// Session API for role `{}` of `{}`. Generated, do not edit.",
        me, e.protocol
    );
    out.push('\n');
    let _ = writeln!(out, "pub const PROTOCOL: &str = {:?};", e.protocol);
    for r in &roles {
        out.push('\n');
        if r == me {
            let _ = writeln!(out, "/// This endpoint.");
        }
        let _ = writeln!(out, "pub enum {r} {{}}");
        let _ = writeln!(
            out,
            "impl {rt}::Role for {r} {{\n    const NAME: &'static str = {r:?};\n}}"
        );
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "impl {rt}::Initial for {me} {{\n    type State = {};\n}}",
        names[&e.initial]
    );
    if let Some(t) = e.terminal {
        let _ = writeln!(
            out,
            "impl {rt}::Terminal for {me} {{\n    type State = {};\n}}",
            names[&t]
        );
    }

    for s in &states {
        let name = &names[s];
        let kind = e.kind(*s).expect("state exists");
        let outs: Vec<&Transition> = e.outgoing(*s).collect();
        out.push('\n');
        match outs.as_slice() {
            [] => {
                let _ = writeln!(out, "/// End of the protocol.");
            }
            [t] if !t.selection => {
                let _ = writeln!(out, "/// {}", describe(t));
            }
            _ => {
                let alts = outs.iter().map(|t| t.label.as_str()).collect::<Vec<_>>().join(" | ");
                let verb = if kind == StateKind::Output { "select" } else { "branch" };
                let _ = writeln!(out, "/// {verb} {}: {alts}", outs[0].peer);
            }
        }
        let _ = writeln!(out, "pub enum {name} {{}}");

        if outs.len() == 1 && !outs[0].selection {
            let t = outs[0];
            let next = &names[&t.to];
            let peer = &t.peer;
            match (t.action, kind) {
                (Action::Send, _) => {
                    let _ = writeln!(
                        out,
                        "impl {cap}::Send<{}> for {name} {{\n    type Peer = {peer};\n    type Next = {next};\n}}",
                        message(t)?
                    );
                }
                (Action::Receive, _) => {
                    let _ = writeln!(
                        out,
                        "impl {cap}::Receive for {name} {{\n    type Peer = {peer};\n    type Message = {};\n    type Next = {next};\n}}",
                        message(t)?
                    );
                }
                (Action::Connect, StateKind::Output) => {
                    let _ = writeln!(
                        out,
                        "impl {cap}::Connect for {name} {{\n    type Peer = {peer};\n    type Next = {next};\n}}"
                    );
                }
                (Action::Connect, _) => {
                    let _ = writeln!(
                        out,
                        "impl {cap}::Accept for {name} {{\n    type Peer = {peer};\n    type Next = {next};\n}}"
                    );
                }
                (Action::Disconnect, StateKind::Output) => {
                    let _ = writeln!(
                        out,
                        "impl {cap}::Disconnect for {name} {{\n    type Peer = {peer};\n    type Next = {next};\n}}"
                    );
                }
                (Action::Disconnect, _) => {
                    let _ = writeln!(
                        out,
                        "impl {cap}::AwaitDisconnect for {name} {{\n    type Peer = {peer};\n    type Next = {next};\n}}"
                    );
                }
            }
            continue;
        }
        if outs.is_empty() {
            continue;
        }

        // Split point: each label edge leads to an intermediate with one payload edge.
        let peer = &outs[0].peer;
        let mut alternatives = Vec::new();
        for t in &outs {
            if !matches!(t.action, Action::Send | Action::Receive) {
                return Err(CodegenError::Unsupported {
                    state: *s,
                    what: describe(t),
                });
            }
            let payload_edge = e.outgoing(t.to).next().expect("split intermediate has an edge");
            alternatives.push((t, payload_edge));
        }
        if kind == StateKind::Output {
            let _ = writeln!(out, "impl {cap}::Select for {name} {{\n    type Peer = {peer};\n}}");
            for (_, p) in &alternatives {
                let _ = writeln!(
                    out,
                    "impl {cap}::Send<{}> for {name} {{\n    type Peer = {peer};\n    type Next = {};\n}}",
                    message(p)?,
                    names[&p.to]
                );
            }
        } else {
            let choices = choices_name(*s);
            let _ = writeln!(
                out,
                "impl {cap}::Branch for {name} {{\n    type Peer = {peer};\n    type Choices = {choices};\n}}"
            );
            out.push('\n');
            let _ = writeln!(
                out,
                "/// Alternatives at [`{name}`]; each continues with the receive of its message."
            );
            let _ = writeln!(out, "pub enum {choices} {{");
            for (t, _) in &alternatives {
                let _ = writeln!(out, "    {}({rt}::Channel<{me}, {}>),", t.label, names[&t.to]);
            }
            out.push_str("}\n\n");
            let _ = writeln!(out, "impl {rt}::Choices<{me}> for {choices} {{");
            let labels = alternatives
                .iter()
                .map(|(t, _)| format!("{:?}", t.label.to_ascii_lowercase()))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "    const LABELS: &'static [&'static str] = &[{labels}];");
            out.push('\n');
            let _ = writeln!(
                out,
                "    fn dispatch(label: &str, resume: {rt}::Resume<{me}>) -> ::std::option::Option<Self> {{"
            );
            out.push_str("        match label {\n");
            for (t, _) in &alternatives {
                let _ = writeln!(
                    out,
                    "            {:?} => Some({choices}::{}(resume.channel())),",
                    t.label.to_ascii_lowercase(),
                    t.label
                );
            }
            out.push_str("            _ => None,\n        }\n    }\n}\n");
        }
    }

    let mut art = GeneratedArtifact::default();
    art.files
        .insert(format!("{}/{}", opts.module_name, api_file_name(&e.protocol, me)), out);
    art.states = states.iter().map(|s| names[s].clone()).collect();
    art.roles = roles;
    Ok(art)
}

/// Messages plus one API file per role (all roles when `roles` is empty).
pub fn generate_protocol(
    m: &ScribbleModule,
    protocol: &str,
    roles: &[String],
    imports: Option<&ImportMap>,
    opts: &ApiOptions,
) -> Result<GeneratedArtifact, CodegenError> {
    let decl = m
        .protocol(protocol)
        .ok_or_else(|| ProjectError::UnknownProtocol(protocol.to_string()))?;
    let roles: Vec<String> = if roles.is_empty() {
        decl.role_params.iter().map(|r| r.name.clone()).collect()
    } else {
        roles.to_vec()
    };
    let catalog = MessageCatalog::from_module(m);
    let mut art = generate_message_types(m, imports, opts)?;
    for r in &roles {
        let lt = project(m, protocol, r)?;
        let e = to_efsm(&lt, protocol, r);
        art.merge(generate_api(&e, &catalog, opts)?);
    }
    Ok(art)
}

/// An endpoint program that must not type-check against the Battleship API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileFailCase {
    pub name: &'static str,
    pub reason: &'static str,
    pub program: String,
    /// rustc error codes, any one of which is the intended rejection.
    pub expected: &'static [&'static str],
}

const P2_SKELETON: &str = r#"use std::future::Future;
use std::pin::Pin;

use gate::game::battle_ships_p2::*;
use gate::game::messages::*;
use gate::model::{Config, Location};
use mpst_runtime::{session, Channel, Initial, SessionConfig, SessionError, Terminal};

type Done = Result<(Channel<P2, <P2 as Terminal>::State>, bool), SessionError>;
type Step = Pin<Box<dyn Future<Output = Done> + Send>>;

fn defend(ch: Channel<P2, S2>) -> Step {
    Box::pin(async move {
        match ch.choice().await? {
            S2Choices::Hit(ch) => {
                let (HitLocation(_), ch) = ch.receive().await?;
                defend(ch).await
            }
            S2Choices::Miss(ch) => {
                let (MissLocation(_), ch) = ch.receive().await?;
                attack(ch).await
            }
            S2Choices::Loser(ch) => {
                let (Loser(_), ch) = ch.receive().await?;
                Ok((ch, false))
            }
        }
    })
}

fn attack(ch: Channel<P2, S3>) -> Step {
    Box::pin(async move {
        let ch = ch.send(Attack(Location { x: 0, y: 0 })).await?;
        match ch.choice().await? {
            S4Choices::Hit(ch) => {
                let (Hit, ch) = ch.receive().await?;
                attack(ch).await
            }
            S4Choices::Miss(ch) => {
                let (Miss, ch) = ch.receive().await?;
                defend(ch).await
            }
            S4Choices::Sunk(ch) => {
                let (Sunk, ch) = ch.receive().await?;
                attack(ch).await
            }
            S4Choices::Winner(ch) => {
                let (Winner, ch) = ch.receive().await?;
                Ok((ch, true))
            }
        }
    })
}

async fn program(ch: Channel<P2, <P2 as Initial>::State>) -> Done {
    let ch = ch.connect("ws://127.0.0.1:8080/").await?;
    let ch = ch.send(Init(Config { ships: vec![] })).await?;
    defend(ch).await
}

fn main() {
    let _ = session::<P2, _, _, _>(SessionConfig::new(PROTOCOL), program);
}
"#;

/// A complete P2 client that type-checks; the compile-fail cases are single
/// edits of it.
pub fn p2_client_skeleton() -> String {
    P2_SKELETON.to_string()
}

fn mutate(from: &str, to: &str) -> String {
    assert!(P2_SKELETON.contains(from), "mutation anchor missing: {from}");
    P2_SKELETON.replacen(from, to, 1)
}

/// Ill-typed P2 programs, each with the rustc error codes that reject it.
/// They expect a library crate `gate` exposing the generated module `game`
/// (messages and `battle_ships_p2`) and a `model` module with `Location { x, y }`
/// and `Config { ships }`.
pub fn compile_fail_corpus() -> Vec<CompileFailCase> {
    vec![
        CompileFailCase {
            name: "skipped_send",
            reason: "waits for the verdict without sending Attack",
            program: mutate(
                "        let ch = ch.send(Attack(Location { x: 0, y: 0 })).await?;\n",
                "",
            ),
            expected: &["E0277"],
        },
        CompileFailCase {
            name: "wrong_payload",
            reason: "sends Attack where Init is expected",
            program: mutate(
                "ch.send(Init(Config { ships: vec![] }))",
                "ch.send(Attack(Location { x: 1, y: 1 }))",
            ),
            // With a single `Send` impl rustc infers the message type and reports a mismatch.
            expected: &["E0308", "E0277"],
        },
        CompileFailCase {
            name: "undefined_label",
            reason: "handles a Sunk alternative the defender's branch does not have",
            program: mutate(
                "            S2Choices::Loser(ch) => {",
                "            S2Choices::Sunk(ch) => {\n                let (Sunk, ch) = ch.receive().await?;\n                attack(ch).await\n            }\n            S2Choices::Loser(ch) => {",
            ),
            expected: &["E0599"],
        },
        CompileFailCase {
            name: "reused_handle",
            reason: "connects with a handle and then uses it again",
            program: mutate(
                "    let ch = ch.connect(\"ws://127.0.0.1:8080/\").await?;\n",
                "    let first = ch.connect(\"ws://127.0.0.1:8080/\").await?;\n    let ch = ch.connect(\"ws://127.0.0.1:8080/\").await?;\n    drop(first);\n",
            ),
            expected: &["E0382"],
        },
        CompileFailCase {
            name: "unfinished_session",
            reason: "returns from the Loser branch before receiving its message",
            program: mutate(
                "                let (Loser(_), ch) = ch.receive().await?;\n",
                "",
            ),
            expected: &["E0308", "E0271"],
        },
        CompileFailCase {
            name: "missing_branch",
            reason: "does not handle the Miss alternative",
            program: mutate(
                "            S2Choices::Miss(ch) => {\n                let (MissLocation(_), ch) = ch.receive().await?;\n                attack(ch).await\n            }\n",
                "",
            ),
            expected: &["E0004"],
        },
        CompileFailCase {
            name: "second_connect",
            reason: "connects to the server twice",
            program: mutate(
                "    let ch = ch.connect(\"ws://127.0.0.1:8080/\").await?;\n",
                "    let ch = ch.connect(\"ws://127.0.0.1:8080/\").await?;\n    let ch = ch.connect(\"ws://127.0.0.1:8080/\").await?;\n",
            ),
            expected: &["E0277"],
        },
    ]
}

/// Model used by the compile-fail programs.
pub const GATE_MODEL: &str = r#"use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub x: i32,
    pub y: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub ships: Vec<Vec<Location>>,
}
"#;

/// Sources of the `gate` library crate the compile-fail programs build against:
/// `src/lib.rs`, `src/model.rs` and the generated Battleship API under `src/game`.
/// The manifest is left to the caller.
pub fn gate_library(battleship: &ScribbleModule) -> Result<GeneratedArtifact, CodegenError> {
    let imports = ImportMap {
        aliases: BTreeMap::from([
            ("Location".to_string(), "crate::model::Location".to_string()),
            ("Config".to_string(), "crate::model::Config".to_string()),
        ]),
    };
    let opts = ApiOptions::new("src/game");
    let mut art = generate_protocol(battleship, "BattleShips", &[], Some(&imports), &opts)?;
    let mut lib = String::from("pub mod model;\n\npub mod game {\n");
    let mut mods: Vec<String> = art
        .files
        .keys()
        .filter_map(|k| k.strip_prefix("src/game/"))
        .map(|f| f.trim_end_matches(".rs").to_string())
        .collect();
    mods.sort();
    for m in mods {
        let _ = writeln!(lib, "    pub mod {m};");
    }
    lib.push_str("}\n");
    art.files.insert("src/lib.rs".into(), lib);
    art.files.insert("src/model.rs".into(), GATE_MODEL.to_string());
    Ok(art)
}

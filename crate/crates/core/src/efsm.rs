//! Endpoint finite state machines: construction from local types, the
//! label-split transformation, invariant checks, and JSON/DOT export.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::project::{LocalType, RecKey};

/// Reserved label carried by connect transitions and handshake frames.
pub const CONNECT_LABEL: &str = "__connect";
/// Reserved label carried by disconnect transitions and frames.
pub const DISCONNECT_LABEL: &str = "__disconnect";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u32);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Output,
    Input,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Send,
    Receive,
    Connect,
    Disconnect,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Send => "send",
            Action::Receive => "receive",
            Action::Connect => "connect",
            Action::Disconnect => "disconnect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub id: StateId,
    pub kind: StateKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub to: StateId,
    pub action: Action,
    pub peer: String,
    pub label: String,
    pub payloads: Vec<String>,
    /// Label-only edge introduced by [`split_labels`]; the payload is carried by
    /// the single transition leaving `to`. Not part of the JSON schema.
    #[serde(skip)]
    pub selection: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Efsm {
    pub protocol: String,
    pub role: String,
    pub initial: StateId,
    pub terminal: Option<StateId>,
    pub states: Vec<State>,
    pub transitions: Vec<Transition>,
}

/// A broken EFSM invariant, as reported by [`Efsm::check_invariants`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantViolation {
    InitialMissing,
    DuplicateState(StateId),
    TerminalMismatch,
    /// Transitions leaving a state disagree on direction or peer.
    Heterogeneous(StateId),
    Nondeterministic {
        state: StateId,
        label: String,
    },
    Unreachable(StateId),
    TerminalHasTransitions,
    KindMismatch(StateId),
    DanglingTransition {
        from: StateId,
        to: StateId,
    },
    ReservedLabel {
        state: StateId,
    },
}

impl Efsm {
    pub fn state(&self, id: StateId) -> Option<&State> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn kind(&self, id: StateId) -> Option<StateKind> {
        self.state(id).map(|s| s.kind)
    }

    pub fn outgoing(&self, id: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.transitions.iter().filter(move |t| t.from == id)
    }

    pub fn incoming(&self, id: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.transitions.iter().filter(move |t| t.to == id)
    }

    /// Checks the structural invariants every projected EFSM must satisfy: one
    /// initial state, at most one terminal state, homogeneous and deterministic
    /// states, and reachability of every state from the initial one.
    pub fn check_invariants(&self) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        let ids: BTreeSet<StateId> = self.states.iter().map(|s| s.id).collect();
        if ids.len() != self.states.len() {
            let mut seen = BTreeSet::new();
            for s in &self.states {
                if !seen.insert(s.id) {
                    out.push(InvariantViolation::DuplicateState(s.id));
                }
            }
        }
        if !ids.contains(&self.initial) {
            out.push(InvariantViolation::InitialMissing);
        }
        let terminal_states: Vec<StateId> = self
            .states
            .iter()
            .filter(|s| s.kind == StateKind::Terminal)
            .map(|s| s.id)
            .collect();
        match (self.terminal, terminal_states.as_slice()) {
            (None, []) => {}
            (Some(t), [only]) if t == *only => {}
            _ => out.push(InvariantViolation::TerminalMismatch),
        }
        for t in &self.transitions {
            if !ids.contains(&t.from) || !ids.contains(&t.to) {
                out.push(InvariantViolation::DanglingTransition { from: t.from, to: t.to });
            }
        }
        for s in &self.states {
            let outs: Vec<&Transition> = self.outgoing(s.id).collect();
            match s.kind {
                StateKind::Terminal => {
                    if !outs.is_empty() {
                        out.push(InvariantViolation::TerminalHasTransitions);
                    }
                    continue;
                }
                _ if outs.is_empty() => out.push(InvariantViolation::KindMismatch(s.id)),
                _ => {}
            }
            let direction = |t: &Transition| match (t.action, s.kind) {
                (Action::Send, _) => StateKind::Output,
                (Action::Receive, _) => StateKind::Input,
                (_, kind) => kind,
            };
            if outs.iter().any(|t| direction(t) != s.kind) {
                out.push(InvariantViolation::KindMismatch(s.id));
            }
            if outs.windows(2).any(|w| w[0].peer != w[1].peer) {
                out.push(InvariantViolation::Heterogeneous(s.id));
            }
            let mut labels = BTreeSet::new();
            for t in &outs {
                if !labels.insert(t.label.to_ascii_lowercase()) {
                    out.push(InvariantViolation::Nondeterministic {
                        state: s.id,
                        label: t.label.clone(),
                    });
                }
                let reserved = match t.action {
                    Action::Connect => t.label != CONNECT_LABEL || !t.payloads.is_empty(),
                    Action::Disconnect => t.label != DISCONNECT_LABEL || !t.payloads.is_empty(),
                    _ => t.label.starts_with("__"),
                };
                if reserved {
                    out.push(InvariantViolation::ReservedLabel { state: s.id });
                }
            }
        }
        let reachable = self.reachable();
        for s in &self.states {
            if !reachable.contains(&s.id) {
                out.push(InvariantViolation::Unreachable(s.id));
            }
        }
        out
    }

    fn reachable(&self) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            if seen.insert(s) {
                queue.extend(self.outgoing(s).map(|t| t.to));
            }
        }
        seen
    }

    /// Renumbers states in breadth-first order from the initial state, following
    /// transitions in list order. Two EFSMs equal up to state renaming have equal
    /// canonical forms as long as their transition lists agree in order.
    pub fn canonical(&self) -> Efsm {
        let mut order: HashMap<StateId, StateId> = HashMap::new();
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            if order.contains_key(&s) {
                continue;
            }
            order.insert(s, StateId(order.len() as u32));
            queue.extend(self.outgoing(s).map(|t| t.to));
        }
        let map = |s: StateId| order[&s];
        let mut states: Vec<State> = self
            .states
            .iter()
            .filter(|s| order.contains_key(&s.id))
            .map(|s| State {
                id: map(s.id),
                kind: s.kind,
            })
            .collect();
        states.sort_by_key(|s| s.id);
        let mut transitions: Vec<Transition> = self
            .transitions
            .iter()
            .filter(|t| order.contains_key(&t.from))
            .map(|t| Transition {
                from: map(t.from),
                to: map(t.to),
                ..t.clone()
            })
            .collect();
        transitions.sort_by_key(|t| t.from);
        Efsm {
            protocol: self.protocol.clone(),
            role: self.role.clone(),
            initial: map(self.initial),
            terminal: self.terminal.filter(|t| order.contains_key(t)).map(map),
            states,
            transitions,
        }
    }
}

struct Builder {
    states: Vec<State>,
    transitions: Vec<Transition>,
    terminal: Option<StateId>,
    binders: HashMap<RecKey, StateId>,
}

impl Builder {
    fn fresh(&mut self, kind: StateKind) -> StateId {
        let id = StateId(self.states.len() as u32);
        self.states.push(State { id, kind });
        id
    }

    fn set_kind(&mut self, id: StateId, kind: StateKind) {
        self.states[id.0 as usize].kind = kind;
    }

    fn terminal(&mut self) -> StateId {
        match self.terminal {
            Some(t) => t,
            None => {
                let t = self.fresh(StateKind::Terminal);
                self.terminal = Some(t);
                t
            }
        }
    }

    /// Builds `lt`, returning its entry state. `slot` is a state reserved by an
    /// enclosing `Rec` that must become the entry state.
    fn build(&mut self, lt: &LocalType, slot: Option<StateId>) -> StateId {
        let edge = |b: &mut Builder,
                    kind: StateKind,
                    action: Action,
                    peer: &str,
                    label: &str,
                    payloads: &[String],
                    cont: &LocalType| {
            let from = match slot {
                Some(s) => {
                    b.set_kind(s, kind);
                    s
                }
                None => b.fresh(kind),
            };
            let to = b.build(cont, None);
            b.transitions.push(Transition {
                from,
                to,
                action,
                peer: peer.to_string(),
                label: label.to_string(),
                payloads: payloads.to_vec(),
                selection: false,
            });
            from
        };
        match lt {
            LocalType::End => {
                debug_assert!(slot.is_none(), "recursion binder over end");
                self.terminal()
            }
            LocalType::RecVar(key) => self.binders[key],
            LocalType::Rec { key, body } => {
                let s = slot.unwrap_or_else(|| self.fresh(StateKind::Output));
                self.binders.insert(*key, s);
                self.build(body, Some(s))
            }
            LocalType::SendMsg {
                to,
                label,
                payloads,
                cont,
            } => edge(self, StateKind::Output, Action::Send, to, label, payloads, cont),
            LocalType::RecvMsg {
                from,
                label,
                payloads,
                cont,
            } => edge(self, StateKind::Input, Action::Receive, from, label, payloads, cont),
            LocalType::ConnectTo { peer, cont } => {
                edge(self, StateKind::Output, Action::Connect, peer, CONNECT_LABEL, &[], cont)
            }
            LocalType::AcceptFrom { peer, cont } => {
                edge(self, StateKind::Input, Action::Connect, peer, CONNECT_LABEL, &[], cont)
            }
            LocalType::DisconnectFrom { peer, cont } => edge(
                self,
                StateKind::Output,
                Action::Disconnect,
                peer,
                DISCONNECT_LABEL,
                &[],
                cont,
            ),
            LocalType::DisconnectedBy { peer, cont } => edge(
                self,
                StateKind::Input,
                Action::Disconnect,
                peer,
                DISCONNECT_LABEL,
                &[],
                cont,
            ),
            LocalType::Select { to, branches } | LocalType::Branch { from: to, branches } => {
                let (kind, action) = if matches!(lt, LocalType::Select { .. }) {
                    (StateKind::Output, Action::Send)
                } else {
                    (StateKind::Input, Action::Receive)
                };
                let from = match slot {
                    Some(s) => {
                        self.set_kind(s, kind);
                        s
                    }
                    None => self.fresh(kind),
                };
                for b in branches {
                    let target = self.build(&b.cont, None);
                    self.transitions.push(Transition {
                        from,
                        to: target,
                        action,
                        peer: to.clone(),
                        label: b.label.clone(),
                        payloads: b.payloads.clone(),
                        selection: false,
                    });
                }
                from
            }
        }
    }
}

/// Builds the EFSM of a projected local type. States are numbered in depth-first
/// construction order, so the output is deterministic.
pub fn to_efsm(lt: &LocalType, protocol: &str, role: &str) -> Efsm {
    let mut b = Builder {
        states: Vec::new(),
        transitions: Vec::new(),
        terminal: None,
        binders: HashMap::new(),
    };
    let initial = b.build(lt, None);
    let mut efsm = Efsm {
        protocol: protocol.to_string(),
        role: role.to_string(),
        initial,
        terminal: b.terminal,
        states: b.states,
        transitions: b.transitions,
    };
    efsm.transitions.sort_by_key(|t| t.from);
    efsm
}

/// Whether `s` has already been split: two or more outgoing edges, all of them
/// label-only selections.
fn is_split_point(e: &Efsm, s: StateId) -> bool {
    let mut outs = e.outgoing(s).peekable();
    outs.peek().is_some() && e.outgoing(s).all(|t| t.selection)
}

/// Splits every state with two or more outgoing transitions into a label edge
/// towards a fresh intermediate state followed by the payload action. States with
/// a single transition are left alone. Applying it twice changes nothing.
pub fn split_labels(e: &Efsm) -> Efsm {
    let mut out = Efsm {
        transitions: Vec::new(),
        ..e.clone()
    };
    let mut next = e.states.iter().map(|s| s.id.0 + 1).max().unwrap_or(0);
    for s in &e.states {
        let outs: Vec<&Transition> = e.outgoing(s.id).collect();
        if outs.len() < 2 || is_split_point(e, s.id) {
            out.transitions.extend(outs.into_iter().cloned());
            continue;
        }
        for t in outs {
            let mid = StateId(next);
            next += 1;
            out.states.push(State { id: mid, kind: s.kind });
            out.transitions.push(Transition {
                from: t.from,
                to: mid,
                action: t.action,
                peer: t.peer.clone(),
                label: t.label.clone(),
                payloads: Vec::new(),
                selection: true,
            });
            out.transitions.push(Transition { from: mid, ..t.clone() });
        }
    }
    // Carry over edges leaving states that are not in `e.states` (none for valid input).
    out.transitions.sort_by_key(|t| t.from);
    out
}

/// One observable step: a label edge of a split EFSM is fused with the payload
/// edge that follows it.
type Step = (Action, String, String, Vec<String>);

fn steps(e: &Efsm, s: StateId) -> Result<Vec<(Step, StateId)>, String> {
    let mut out = Vec::new();
    for t in e.outgoing(s) {
        let t = if t.selection {
            let next: Vec<&Transition> = e.outgoing(t.to).collect();
            match next.as_slice() {
                [only] => *only,
                _ => {
                    return Err(format!(
                        "{}: label edge `{}` from {s} is not followed by one action",
                        e.role, t.label
                    ))
                }
            }
        } else {
            t
        };
        let key = (
            t.action,
            t.peer.clone(),
            t.label.to_ascii_lowercase(),
            t.payloads.clone(),
        );
        out.push((key, t.to));
    }
    out.sort();
    Ok(out)
}

/// Checks that `a` and `b` allow the same observable steps from their initial
/// states up to `depth` steps deep, treating split label edges as part of the
/// action they select. Both machines must be deterministic.
pub fn equivalent_to_depth(a: &Efsm, b: &Efsm, depth: usize) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([(a.initial, b.initial, 0usize)]);
    while let Some((x, y, d)) = queue.pop_front() {
        if d > depth || !seen.insert((x, y)) {
            continue;
        }
        let sx = steps(a, x)?;
        let sy = steps(b, y)?;
        let kx: Vec<&Step> = sx.iter().map(|(k, _)| k).collect();
        let ky: Vec<&Step> = sy.iter().map(|(k, _)| k).collect();
        if kx != ky {
            return Err(format!("after {d} steps, {x} allows {kx:?} but {y} allows {ky:?}"));
        }
        if (a.kind(x) == Some(StateKind::Terminal)) != (b.kind(y) == Some(StateKind::Terminal)) {
            return Err(format!("{x} and {y} disagree on termination"));
        }
        for ((_, tx), (_, ty)) in sx.iter().zip(&sy) {
            queue.push_back((*tx, *ty, d + 1));
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonEfsm {
    protocol: String,
    role: String,
    initial: u32,
    terminal: Option<u32>,
    states: Vec<JsonState>,
    transitions: Vec<JsonTransition>,
}

#[derive(Serialize, Deserialize)]
struct JsonState {
    id: u32,
    kind: StateKind,
}

#[derive(Serialize, Deserialize)]
struct JsonTransition {
    from: u32,
    to: u32,
    action: Action,
    peer: String,
    label: String,
    payloads: Vec<String>,
}

/// Serialises to the EFSM JSON interchange format (pretty-printed, stable key order).
pub fn export_efsm_json(e: &Efsm) -> String {
    let json = JsonEfsm {
        protocol: e.protocol.clone(),
        role: e.role.clone(),
        initial: e.initial.0,
        terminal: e.terminal.map(|t| t.0),
        states: e
            .states
            .iter()
            .map(|s| JsonState {
                id: s.id.0,
                kind: s.kind,
            })
            .collect(),
        transitions: e
            .transitions
            .iter()
            .map(|t| JsonTransition {
                from: t.from.0,
                to: t.to.0,
                action: t.action,
                peer: t.peer.clone(),
                label: t.label.clone(),
                payloads: t.payloads.clone(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&json).expect("EFSM serialises");
    text.push('\n');
    text
}

/// Reads the JSON interchange format back. Label-only selection edges are
/// recovered structurally: an edge with no payloads leaving a state with several
/// edges, whose target has exactly one incoming edge and exactly one outgoing
/// edge with the same action, peer and label.
pub fn import_efsm_json(text: &str) -> Result<Efsm, serde_json::Error> {
    let json: JsonEfsm = serde_json::from_str(text)?;
    let mut e = Efsm {
        protocol: json.protocol,
        role: json.role,
        initial: StateId(json.initial),
        terminal: json.terminal.map(StateId),
        states: json
            .states
            .into_iter()
            .map(|s| State {
                id: StateId(s.id),
                kind: s.kind,
            })
            .collect(),
        transitions: json
            .transitions
            .into_iter()
            .map(|t| Transition {
                from: StateId(t.from),
                to: StateId(t.to),
                action: t.action,
                peer: t.peer,
                label: t.label,
                payloads: t.payloads,
                selection: false,
            })
            .collect(),
    };
    let selection: Vec<bool> = e
        .transitions
        .iter()
        .map(|t| {
            let siblings = e.outgoing(t.from).count();
            let ins = e.incoming(t.to).count();
            let outs: Vec<&Transition> = e.outgoing(t.to).collect();
            siblings >= 2
                && t.payloads.is_empty()
                && ins == 1
                && outs.len() == 1
                && outs[0].action == t.action
                && outs[0].peer == t.peer
                && outs[0].label == t.label
        })
        .collect();
    for (t, sel) in e.transitions.iter_mut().zip(selection) {
        t.selection = sel;
    }
    Ok(e)
}

/// Human-readable edge label: `action peer: label(payloads)`.
pub fn edge_label(t: &Transition) -> String {
    match t.action {
        Action::Connect | Action::Disconnect => format!("{} {}", t.action, t.peer),
        _ if t.selection => format!("{} {}: {}", t.action, t.peer, t.label),
        _ => format!("{} {}: {}({})", t.action, t.peer, t.label, t.payloads.join(", ")),
    }
}

/// Graphviz rendering: one node per state, one edge per transition.
pub fn export_dot(e: &Efsm) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}_{}\" {{", e.protocol, e.role);
    out.push_str("  rankdir=TB;\n");
    out.push_str("  start [shape=point];\n");
    for s in &e.states {
        let shape = if s.kind == StateKind::Terminal {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(out, "  {} [shape={}];", s.id, shape);
    }
    let _ = writeln!(out, "  start -> {};", e.initial);
    for t in &e.transitions {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\"];",
            t.from,
            t.to,
            edge_label(t).replace('"', "\\\"")
        );
    }
    out.push_str("}\n");
    out
}

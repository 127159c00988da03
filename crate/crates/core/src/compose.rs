//! Bounded-buffer product of endpoint machines.
//!
//! Sends go into a FIFO per ordered role pair holding at most `bound`
//! messages; `bound == 0` makes every send a rendezvous. Connects are always
//! rendezvous, disconnects behave like sends of the reserved label.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::ast::ScribbleModule;
use crate::efsm::{to_efsm, Action, Efsm, StateId, StateKind, DISCONNECT_LABEL};
use crate::project::{project, ProjectError};

pub const DEFAULT_BUFFER_BOUND: usize = 1;
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub sender: String,
    pub receiver: String,
    pub label: String,
    /// `Send` for enqueues and rendezvous, `Receive` for dequeues.
    pub action: Action,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.action {
            Action::Receive => write!(f, "{} ? {}: {}", self.receiver, self.sender, self.label),
            Action::Connect => write!(f, "{} connects {}", self.sender, self.receiver),
            _ => write!(f, "{} ! {}: {}", self.sender, self.receiver, self.label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sender: String,
    pub receiver: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Deadlock { trace: Vec<TraceStep> },
    Orphan { trace: Vec<TraceStep>, message: Message },
    UnspecifiedReception { trace: Vec<TraceStep>, message: Message },
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::Deadlock { .. } => "deadlock",
            Outcome::Orphan { .. } => "orphan",
            Outcome::UnspecifiedReception { .. } => "unspecified_reception",
        }
    }

    pub fn trace(&self) -> &[TraceStep] {
        match self {
            Outcome::Ok => &[],
            Outcome::Deadlock { trace }
            | Outcome::Orphan { trace, .. }
            | Outcome::UnspecifiedReception { trace, .. } => trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedReport {
    pub explored_states: usize,
    pub result: Outcome,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComposeError {
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("state space exceeds {cap} states")]
    ExplosionLimit { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Global {
    states: Vec<StateId>,
    /// Indexed by `from * n + to`; entries are (label, payloads).
    buffers: Vec<VecDeque<(String, Vec<String>)>>,
}

struct Product<'a> {
    efsms: &'a [Efsm],
    bound: usize,
}

enum Step {
    Next(Global, Vec<TraceStep>),
    Stuck(Message),
}

impl Product<'_> {
    fn n(&self) -> usize {
        self.efsms.len()
    }

    fn index(&self, role: &str) -> Option<usize> {
        self.efsms.iter().position(|e| e.role == role)
    }

    fn terminated(&self, e: &Efsm, s: StateId) -> bool {
        e.kind(s) == Some(StateKind::Terminal) || e.outgoing(s).next().is_none()
    }

    fn successors(&self, g: &Global) -> Vec<Step> {
        let n = self.n();
        let mut out = Vec::new();
        for (i, e) in self.efsms.iter().enumerate() {
            let here = g.states[i];
            let kind = e.kind(here);
            for t in e.outgoing(here) {
                let Some(j) = self.index(&t.peer) else { continue };
                let step = |sender: usize, receiver: usize, label: &str, action| TraceStep {
                    sender: self.efsms[sender].role.clone(),
                    receiver: self.efsms[receiver].role.clone(),
                    label: label.to_string(),
                    action,
                };
                match (kind, t.action) {
                    (Some(StateKind::Output), Action::Connect) => {
                        // Rendezvous with the matching accept.
                        let peer = &self.efsms[j];
                        for u in peer.outgoing(g.states[j]) {
                            if peer.kind(g.states[j]) == Some(StateKind::Input)
                                && u.action == Action::Connect
                                && u.peer == e.role
                            {
                                let mut next = g.clone();
                                next.states[i] = t.to;
                                next.states[j] = u.to;
                                out.push(Step::Next(next, vec![step(i, j, &t.label, Action::Connect)]));
                            }
                        }
                    }
                    (Some(StateKind::Output), Action::Send | Action::Disconnect) => {
                        let label = if t.action == Action::Disconnect {
                            DISCONNECT_LABEL
                        } else {
                            t.label.as_str()
                        };
                        if self.bound == 0 {
                            let peer = &self.efsms[j];
                            if peer.kind(g.states[j]) != Some(StateKind::Input) {
                                continue;
                            }
                            for u in peer.outgoing(g.states[j]) {
                                if u.peer == e.role
                                    && u.action != Action::Connect
                                    && u.label == label
                                    && u.payloads == t.payloads
                                {
                                    let mut next = g.clone();
                                    next.states[i] = t.to;
                                    next.states[j] = u.to;
                                    out.push(Step::Next(next, vec![step(i, j, label, Action::Send)]));
                                }
                            }
                        } else if g.buffers[i * n + j].len() < self.bound {
                            let mut next = g.clone();
                            next.states[i] = t.to;
                            next.buffers[i * n + j].push_back((label.to_string(), t.payloads.clone()));
                            out.push(Step::Next(next, vec![step(i, j, label, Action::Send)]));
                        }
                    }
                    _ => {}
                }
            }
            // Dequeue at input states. Input states are homogeneous, so one peer.
            if kind == Some(StateKind::Input) && self.bound > 0 {
                let Some(first) = e.outgoing(here).next() else { continue };
                if first.action == Action::Connect {
                    continue;
                }
                let Some(j) = self.index(&first.peer) else { continue };
                let Some((label, payloads)) = g.buffers[j * n + i].front() else {
                    continue;
                };
                let matched = e.outgoing(here).find(|t| &t.label == label && &t.payloads == payloads);
                match matched {
                    Some(t) => {
                        let mut next = g.clone();
                        next.states[i] = t.to;
                        next.buffers[j * n + i].pop_front();
                        out.push(Step::Next(
                            next,
                            vec![TraceStep {
                                sender: self.efsms[j].role.clone(),
                                receiver: e.role.clone(),
                                label: label.clone(),
                                action: Action::Receive,
                            }],
                        ));
                    }
                    None => out.push(Step::Stuck(Message {
                        sender: self.efsms[j].role.clone(),
                        receiver: e.role.clone(),
                        label: label.clone(),
                    })),
                }
            }
        }
        out
    }
}

/// Explores the product of `efsms` (one per role, unsplit) breadth first.
/// The first defect found in BFS order is reported, so traces are shortest.
pub fn compose_efsms(efsms: &[Efsm], bound: usize, cap: usize) -> Result<ComposedReport, ComposeError> {
    let product = Product { efsms, bound };
    let n = product.n();
    let start = Global {
        states: efsms.iter().map(|e| e.initial).collect(),
        buffers: vec![VecDeque::new(); n * n],
    };
    // Each entry: (state, parent index, step that led here).
    let mut nodes: Vec<(Global, usize, Vec<TraceStep>)> = vec![(start.clone(), usize::MAX, vec![])];
    let mut seen: HashMap<Global, usize> = HashMap::from([(start, 0)]);
    let mut cursor = 0;

    let trace_to = |nodes: &Vec<(Global, usize, Vec<TraceStep>)>, mut at: usize| {
        let mut steps = Vec::new();
        while at != usize::MAX {
            let (_, parent, step) = &nodes[at];
            steps.extend(step.iter().rev().cloned());
            at = *parent;
        }
        steps.reverse();
        steps
    };

    while cursor < nodes.len() {
        let g = nodes[cursor].0.clone();
        let all_done = efsms.iter().zip(&g.states).all(|(e, &s)| product.terminated(e, s));
        if all_done {
            if let Some(k) = g.buffers.iter().position(|b| !b.is_empty()) {
                let (label, _) = g.buffers[k].front().unwrap();
                return Ok(ComposedReport {
                    explored_states: nodes.len(),
                    result: Outcome::Orphan {
                        trace: trace_to(&nodes, cursor),
                        message: Message {
                            sender: efsms[k / n].role.clone(),
                            receiver: efsms[k % n].role.clone(),
                            label: label.clone(),
                        },
                    },
                });
            }
            cursor += 1;
            continue;
        }
        let succ = product.successors(&g);
        if succ.is_empty() {
            return Ok(ComposedReport {
                explored_states: nodes.len(),
                result: Outcome::Deadlock {
                    trace: trace_to(&nodes, cursor),
                },
            });
        }
        for s in succ {
            match s {
                Step::Stuck(message) => {
                    return Ok(ComposedReport {
                        explored_states: nodes.len(),
                        result: Outcome::UnspecifiedReception {
                            trace: trace_to(&nodes, cursor),
                            message,
                        },
                    })
                }
                Step::Next(next, step) => {
                    if seen.contains_key(&next) {
                        continue;
                    }
                    if nodes.len() >= cap {
                        return Err(ComposeError::ExplosionLimit { cap });
                    }
                    seen.insert(next.clone(), nodes.len());
                    nodes.push((next, cursor, step));
                }
            }
        }
        cursor += 1;
    }
    Ok(ComposedReport {
        explored_states: nodes.len(),
        result: Outcome::Ok,
    })
}

/// Projects every role of `protocol` and explores their product.
pub fn compose_check(m: &ScribbleModule, protocol: &str, bound: usize) -> Result<ComposedReport, ComposeError> {
    compose_check_with_cap(m, protocol, bound, DEFAULT_STATE_CAP)
}

pub fn compose_check_with_cap(
    m: &ScribbleModule,
    protocol: &str,
    bound: usize,
    cap: usize,
) -> Result<ComposedReport, ComposeError> {
    let decl = m
        .protocol(protocol)
        .ok_or_else(|| ProjectError::UnknownProtocol(protocol.to_string()))?;
    let efsms = decl
        .role_params
        .iter()
        .map(|r| project(m, protocol, &r.name).map(|lt| to_efsm(&lt, protocol, &r.name)))
        .collect::<Result<Vec<_>, _>>()?;
    compose_efsms(&efsms, bound, cap)
}

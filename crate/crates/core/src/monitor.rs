//! Runtime conformance checking: an EFSM interpreter fed with observed frames.

use std::fmt;

use crate::efsm::{Action, Efsm, StateId, StateKind, CONNECT_LABEL, DISCONNECT_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Outbound,
    Inbound,
}

/// One logical frame as seen by an endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub direction: Direction,
    pub peer: String,
    /// Wire label (case-insensitive match against the EFSM).
    pub label: String,
    pub arity: Option<usize>,
}

impl Observation {
    pub fn new(direction: Direction, peer: impl Into<String>, label: impl Into<String>) -> Self {
        Observation {
            direction,
            peer: peer.into(),
            label: label.into(),
            arity: None,
        }
    }

    pub fn with_arity(mut self, arity: usize) -> Self {
        self.arity = Some(arity);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub role: String,
    pub state: StateId,
    pub observed: Observation,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.observed.direction {
            Direction::Outbound => "to",
            Direction::Inbound => "from",
        };
        write!(
            f,
            "{} at {}: `{}` {} {}: {}",
            self.role, self.state, self.observed.label, dir, self.observed.peer, self.reason
        )
    }
}

impl std::error::Error for Violation {}

/// Tracks one endpoint through its EFSM. Split and unsplit machines are both
/// accepted; a label-only edge is followed together with its payload edge.
#[derive(Debug, Clone)]
pub struct Monitor {
    efsm: Efsm,
    state: StateId,
    steps: usize,
}

impl Monitor {
    pub fn new(efsm: Efsm) -> Self {
        let state = efsm.initial;
        Monitor { efsm, state, steps: 0 }
    }

    pub fn state(&self) -> StateId {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn efsm(&self) -> &Efsm {
        &self.efsm
    }

    pub fn is_terminal(&self) -> bool {
        self.efsm.kind(self.state) == Some(StateKind::Terminal) || self.efsm.outgoing(self.state).next().is_none()
    }

    pub fn observe(&mut self, obs: &Observation) -> Result<(), Violation> {
        let fail = |reason: String| Violation {
            role: self.efsm.role.clone(),
            state: self.state,
            observed: obs.clone(),
            reason,
        };
        let kind = self.efsm.kind(self.state);
        let expected_kind = match obs.direction {
            Direction::Outbound => StateKind::Output,
            Direction::Inbound => StateKind::Input,
        };
        if kind != Some(expected_kind) {
            return Err(fail(format!("state is {:?}", kind.unwrap_or(StateKind::Terminal))));
        }
        let wanted = |t: &&crate::efsm::Transition| {
            let label_ok = match t.action {
                Action::Connect => obs.label == CONNECT_LABEL,
                Action::Disconnect => obs.label == DISCONNECT_LABEL,
                _ => t.label.eq_ignore_ascii_case(&obs.label),
            };
            label_ok && t.peer == obs.peer
        };
        let Some(t) = self.efsm.outgoing(self.state).find(wanted).cloned() else {
            let enabled: Vec<String> = self
                .efsm
                .outgoing(self.state)
                .map(|t| format!("{} {}", t.peer, t.label))
                .collect();
            return Err(fail(format!("not enabled; expected one of [{}]", enabled.join(", "))));
        };
        let payload_edge = if t.selection {
            let next: Vec<_> = self.efsm.outgoing(t.to).cloned().collect();
            match next.as_slice() {
                [only] => only.clone(),
                _ => return Err(fail("malformed split state".into())),
            }
        } else {
            t
        };
        if let (Some(n), Action::Send | Action::Receive) = (obs.arity, payload_edge.action) {
            if n != payload_edge.payloads.len() {
                return Err(fail(format!(
                    "payload arity {} but {} declared",
                    n,
                    payload_edge.payloads.len()
                )));
            }
        }
        self.state = payload_edge.to;
        self.steps += 1;
        Ok(())
    }
}

//! Projection of global protocols onto a single role.

use std::collections::HashMap;
use std::fmt;

use crate::ast::{GlobalStatement, ScribbleModule, Span};

/// Identifies one recursion binder: a `do` call site resolved to concrete roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecKey(pub u32);

impl fmt::Display for RecKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K{}", self.0)
    }
}

/// One alternative of a [`LocalType::Select`] or [`LocalType::Branch`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalBranch {
    pub label: String,
    pub payloads: Vec<String>,
    pub cont: LocalType,
}

/// A role's local view of a protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalType {
    SendMsg {
        to: String,
        label: String,
        payloads: Vec<String>,
        cont: Box<LocalType>,
    },
    RecvMsg {
        from: String,
        label: String,
        payloads: Vec<String>,
        cont: Box<LocalType>,
    },
    /// Internal choice: this role picks one label and sends it to `to`.
    Select {
        to: String,
        branches: Vec<LocalBranch>,
    },
    /// External choice: `from` picks the label.
    Branch {
        from: String,
        branches: Vec<LocalBranch>,
    },
    /// This role opens a connection to `peer`.
    ConnectTo {
        peer: String,
        cont: Box<LocalType>,
    },
    /// `peer` opens a connection to this role.
    AcceptFrom {
        peer: String,
        cont: Box<LocalType>,
    },
    /// This role closes its connection with `peer`.
    DisconnectFrom {
        peer: String,
        cont: Box<LocalType>,
    },
    /// `peer` closes its connection with this role.
    DisconnectedBy {
        peer: String,
        cont: Box<LocalType>,
    },
    RecVar(RecKey),
    Rec {
        key: RecKey,
        body: Box<LocalType>,
    },
    End,
}

impl LocalType {
    /// Whether `key` occurs free in this type.
    pub fn mentions(&self, key: RecKey) -> bool {
        match self {
            LocalType::RecVar(k) => *k == key,
            LocalType::Rec { key: k, body } => *k != key && body.mentions(key),
            LocalType::End => false,
            LocalType::Select { branches, .. } | LocalType::Branch { branches, .. } => {
                branches.iter().any(|b| b.cont.mentions(key))
            }
            LocalType::SendMsg { cont, .. }
            | LocalType::RecvMsg { cont, .. }
            | LocalType::ConnectTo { cont, .. }
            | LocalType::AcceptFrom { cont, .. }
            | LocalType::DisconnectFrom { cont, .. }
            | LocalType::DisconnectedBy { cont, .. } => cont.mentions(key),
        }
    }

    /// Receive alternatives offered by `from`, if this type starts with a receive.
    fn receive_alternatives(&self) -> Option<(&str, Vec<LocalBranch>)> {
        match self {
            LocalType::RecvMsg {
                from,
                label,
                payloads,
                cont,
            } => Some((
                from,
                vec![LocalBranch {
                    label: label.clone(),
                    payloads: payloads.clone(),
                    cont: (**cont).clone(),
                }],
            )),
            LocalType::Branch { from, branches } => Some((from, branches.clone())),
            _ => None,
        }
    }

    fn send_alternatives(&self) -> Option<(&str, Vec<LocalBranch>)> {
        match self {
            LocalType::SendMsg {
                to,
                label,
                payloads,
                cont,
            } => Some((
                to,
                vec![LocalBranch {
                    label: label.clone(),
                    payloads: payloads.clone(),
                    cont: (**cont).clone(),
                }],
            )),
            LocalType::Select { to, branches } => Some((to, branches.clone())),
            _ => None,
        }
    }

    fn receive(from: &str, mut branches: Vec<LocalBranch>) -> LocalType {
        if branches.len() == 1 {
            let b = branches.pop().expect("one branch");
            LocalType::RecvMsg {
                from: from.to_string(),
                label: b.label,
                payloads: b.payloads,
                cont: Box::new(b.cont),
            }
        } else {
            LocalType::Branch {
                from: from.to_string(),
                branches,
            }
        }
    }

    fn send(to: &str, mut branches: Vec<LocalBranch>) -> LocalType {
        if branches.len() == 1 {
            let b = branches.pop().expect("one branch");
            LocalType::SendMsg {
                to: to.to_string(),
                label: b.label,
                payloads: b.payloads,
                cont: Box::new(b.cont),
            }
        } else {
            LocalType::Select {
                to: to.to_string(),
                branches,
            }
        }
    }
}

impl fmt::Display for LocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn alts(f: &mut fmt::Formatter<'_>, branches: &[LocalBranch]) -> fmt::Result {
            f.write_str("{")?;
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}({}): {}", b.label, b.payloads.join(", "), b.cont)?;
            }
            f.write_str("}")
        }
        match self {
            LocalType::SendMsg {
                to,
                label,
                payloads,
                cont,
            } => write!(f, "{to}!{label}({}).{cont}", payloads.join(", ")),
            LocalType::RecvMsg {
                from,
                label,
                payloads,
                cont,
            } => write!(f, "{from}?{label}({}).{cont}", payloads.join(", ")),
            LocalType::Select { to, branches } => {
                write!(f, "{to}⊕")?;
                alts(f, branches)
            }
            LocalType::Branch { from, branches } => {
                write!(f, "{from}&")?;
                alts(f, branches)
            }
            LocalType::ConnectTo { peer, cont } => write!(f, "connect {peer}.{cont}"),
            LocalType::AcceptFrom { peer, cont } => write!(f, "accept {peer}.{cont}"),
            LocalType::DisconnectFrom { peer, cont } => write!(f, "disconnect {peer}.{cont}"),
            LocalType::DisconnectedBy { peer, cont } => write!(f, "disconnected {peer}.{cont}"),
            LocalType::RecVar(k) => write!(f, "{k}"),
            LocalType::Rec { key, body } => write!(f, "μ{key}.{body}"),
            LocalType::End => f.write_str("end"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProjectError {
    #[error("protocol `{0}` is not declared")]
    UnknownProtocol(String),
    #[error("role `{role}` not declared in protocol `{protocol}`")]
    UnknownRole { protocol: String, role: String },
    #[error("branches demand different behaviour from role `{role}`, which is not informed of the choice")]
    Unmergeable { role: String, span: Span },
    #[error("choice at `{chooser}` does not start every branch with a message sent by `{chooser}`")]
    ChooserNotSender { chooser: String, span: Span },
    #[error("choice at `{chooser}` selects towards more than one peer")]
    SelectPeers { chooser: String, span: Span },
    #[error("label `{label}` opens more than one branch of the same choice")]
    DuplicateLabel { label: String, span: Span },
    #[error("`do` statement refers to undeclared protocol `{protocol}`")]
    UnknownCallee { protocol: String, span: Span },
    #[error("`do {protocol}` passes {given} roles, expected {expected}")]
    CallArity {
        protocol: String,
        given: usize,
        expected: usize,
        span: Span,
    },
    #[error("recursion does not close within {limit} bindings (non-tail `do`?)")]
    UnboundedRec { limit: usize, span: Span },
}

impl ProjectError {
    pub fn span(&self) -> Option<Span> {
        match self {
            ProjectError::UnknownProtocol(_) | ProjectError::UnknownRole { .. } => None,
            ProjectError::Unmergeable { span, .. }
            | ProjectError::ChooserNotSender { span, .. }
            | ProjectError::SelectPeers { span, .. }
            | ProjectError::DuplicateLabel { span, .. }
            | ProjectError::UnknownCallee { span, .. }
            | ProjectError::CallArity { span, .. }
            | ProjectError::UnboundedRec { span, .. } => Some(*span),
        }
    }
}

type Subst = Vec<(String, String)>;

/// Statements still to run after the current block, with their role binding.
#[derive(Clone)]
struct Frame<'m> {
    stmts: &'m [GlobalStatement],
    subst: Subst,
}

/// What a recursion binder is keyed on: callee, concrete roles, and the pending
/// continuation (by statement-list identity), so tail calls close into loops.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct KeyData {
    protocol: String,
    args: Vec<String>,
    frames: Vec<(usize, usize, Subst)>,
}

struct Projector<'m> {
    module: &'m ScribbleModule,
    role: String,
    keys: HashMap<KeyData, RecKey>,
    active: Vec<RecKey>,
    limit: usize,
}

fn lookup(subst: &Subst, role: &str) -> String {
    subst
        .iter()
        .find(|(formal, _)| formal == role)
        .map(|(_, concrete)| concrete.clone())
        .unwrap_or_else(|| role.to_string())
}

impl<'m> Projector<'m> {
    fn project_block(
        &mut self,
        stmts: &'m [GlobalStatement],
        subst: &Subst,
        conts: &[Frame<'m>],
    ) -> Result<LocalType, ProjectError> {
        let Some((first, rest)) = stmts.split_first() else {
            return match conts.split_last() {
                None => Ok(LocalType::End),
                Some((frame, outer)) => self.project_block(frame.stmts, &frame.subst, outer),
            };
        };
        let me = self.role.clone();
        match first {
            GlobalStatement::Transfer {
                label,
                payloads,
                from,
                to,
                ..
            } => {
                let (from, to) = (lookup(subst, &from.name), lookup(subst, &to.name));
                let cont = self.project_block(rest, subst, conts)?;
                let payloads = payloads.iter().map(|p| p.name.clone()).collect();
                Ok(if from == me {
                    LocalType::SendMsg {
                        to,
                        label: label.name.clone(),
                        payloads,
                        cont: Box::new(cont),
                    }
                } else if to == me {
                    LocalType::RecvMsg {
                        from,
                        label: label.name.clone(),
                        payloads,
                        cont: Box::new(cont),
                    }
                } else {
                    cont
                })
            }
            GlobalStatement::Connect { from, to, .. } => {
                let (from, to) = (lookup(subst, &from.name), lookup(subst, &to.name));
                let cont = Box::new(self.project_block(rest, subst, conts)?);
                Ok(if from == me {
                    LocalType::ConnectTo { peer: to, cont }
                } else if to == me {
                    LocalType::AcceptFrom { peer: from, cont }
                } else {
                    *cont
                })
            }
            GlobalStatement::Disconnect { from, to, .. } => {
                let (from, to) = (lookup(subst, &from.name), lookup(subst, &to.name));
                let cont = Box::new(self.project_block(rest, subst, conts)?);
                Ok(if from == me {
                    LocalType::DisconnectFrom { peer: to, cont }
                } else if to == me {
                    LocalType::DisconnectedBy { peer: from, cont }
                } else {
                    *cont
                })
            }
            GlobalStatement::Choice { at, branches, span } => {
                let chooser = lookup(subst, &at.name);
                let conts = push_frame(conts, rest, subst);
                let projected = branches
                    .iter()
                    .map(|b| self.project_block(b, subst, &conts))
                    .collect::<Result<Vec<_>, _>>()?;
                if chooser == me {
                    merge_select(&chooser, projected, *span)
                } else {
                    merge_all(&me, projected, *span)
                }
            }
            GlobalStatement::Do {
                protocol,
                role_args,
                span,
            } => {
                let callee = self
                    .module
                    .protocol(&protocol.name)
                    .ok_or_else(|| ProjectError::UnknownCallee {
                        protocol: protocol.name.clone(),
                        span: *span,
                    })?;
                if callee.role_params.len() != role_args.len() {
                    return Err(ProjectError::CallArity {
                        protocol: protocol.name.clone(),
                        given: role_args.len(),
                        expected: callee.role_params.len(),
                        span: *span,
                    });
                }
                let args: Vec<String> = role_args.iter().map(|r| lookup(subst, &r.name)).collect();
                let callee_subst: Subst = callee
                    .role_params
                    .iter()
                    .map(|p| p.name.clone())
                    .zip(args.iter().cloned())
                    .collect();
                let conts = push_frame(conts, rest, subst);
                let data = KeyData {
                    protocol: protocol.name.clone(),
                    args,
                    frames: conts
                        .iter()
                        .map(|f| (f.stmts.as_ptr() as usize, f.stmts.len(), f.subst.clone()))
                        .collect(),
                };
                let next = RecKey(self.keys.len() as u32);
                let key = *self.keys.entry(data).or_insert(next);
                if self.keys.len() > self.limit {
                    return Err(ProjectError::UnboundedRec {
                        limit: self.limit,
                        span: *span,
                    });
                }
                if self.active.contains(&key) {
                    return Ok(LocalType::RecVar(key));
                }
                self.active.push(key);
                let body = self.project_block(&callee.body, &callee_subst, &conts);
                self.active.pop();
                Ok(close_binder(key, body?))
            }
        }
    }
}

fn push_frame<'m>(conts: &[Frame<'m>], rest: &'m [GlobalStatement], subst: &Subst) -> Vec<Frame<'m>> {
    let mut out = conts.to_vec();
    if !rest.is_empty() {
        out.push(Frame {
            stmts: rest,
            subst: subst.clone(),
        });
    }
    out
}

fn merge_select(chooser: &str, branches: Vec<LocalType>, span: Span) -> Result<LocalType, ProjectError> {
    if branches.windows(2).all(|w| w[0] == w[1]) {
        return Ok(branches.into_iter().next().unwrap_or(LocalType::End));
    }
    let mut peer: Option<String> = None;
    let mut out: Vec<LocalBranch> = Vec::new();
    for b in &branches {
        let (to, alts) = b.send_alternatives().ok_or_else(|| ProjectError::ChooserNotSender {
            chooser: chooser.to_string(),
            span,
        })?;
        match &peer {
            Some(p) if p != to => {
                return Err(ProjectError::SelectPeers {
                    chooser: chooser.to_string(),
                    span,
                })
            }
            _ => peer = Some(to.to_string()),
        }
        for alt in alts {
            if out.iter().any(|o| o.label.eq_ignore_ascii_case(&alt.label)) {
                return Err(ProjectError::DuplicateLabel { label: alt.label, span });
            }
            out.push(alt);
        }
    }
    Ok(LocalType::send(&peer.expect("at least two branches"), out))
}

fn merge_all(role: &str, branches: Vec<LocalType>, span: Span) -> Result<LocalType, ProjectError> {
    let mut iter = branches.into_iter();
    let mut acc = iter.next().unwrap_or(LocalType::End);
    for next in iter {
        acc = merge(role, acc, next, span)?;
    }
    Ok(acc)
}

/// Plain merge extended with receive-union: identical projections merge to themselves,
/// receives from one peer merge label-wise (shared labels must carry the same payloads
/// and mergeable continuations).
pub(crate) fn merge(role: &str, a: LocalType, b: LocalType, span: Span) -> Result<LocalType, ProjectError> {
    if a == b {
        return Ok(a);
    }
    let unmergeable = || ProjectError::Unmergeable {
        role: role.to_string(),
        span,
    };
    if let (Some((fa, mut alts)), Some((fb, more))) = (a.receive_alternatives(), b.receive_alternatives()) {
        if fa != fb {
            return Err(unmergeable());
        }
        let from = fa.to_string();
        for alt in more {
            match alts.iter_mut().find(|x| x.label == alt.label) {
                Some(existing) => {
                    if existing.payloads != alt.payloads {
                        return Err(unmergeable());
                    }
                    let cont = std::mem::replace(&mut existing.cont, LocalType::End);
                    existing.cont = merge(role, cont, alt.cont, span)?;
                }
                None => {
                    if alts.iter().any(|x| x.label.eq_ignore_ascii_case(&alt.label)) {
                        return Err(unmergeable());
                    }
                    alts.push(alt)
                }
            }
        }
        return Ok(LocalType::receive(&from, alts));
    }
    match (a, b) {
        (LocalType::Rec { key: ka, body: ba }, LocalType::Rec { key: kb, body: bb }) if ka == kb => {
            Ok(LocalType::Rec {
                key: ka,
                body: Box::new(merge(role, *ba, *bb, span)?),
            })
        }
        _ => Err(unmergeable()),
    }
}

fn factorial_bound(n: usize) -> usize {
    (1..=n)
        .try_fold(1usize, |acc, k| acc.checked_mul(k))
        .unwrap_or(usize::MAX)
}

/// Projects `protocol` onto `role`.
///
/// Interactions not involving `role` are elided; choices become `Select` at the
/// chooser and `Branch` at informed receivers, and are merged for everyone else.
/// `do` calls are memoised on (callee, concrete roles, pending continuation), so
/// tail recursion, including calls that permute roles, closes into `Rec`/`RecVar`.
pub fn project(m: &ScribbleModule, protocol: &str, role: &str) -> Result<LocalType, ProjectError> {
    let decl = m
        .protocol(protocol)
        .ok_or_else(|| ProjectError::UnknownProtocol(protocol.to_string()))?;
    if !decl.role_params.iter().any(|r| r.name == role) {
        return Err(ProjectError::UnknownRole {
            protocol: protocol.to_string(),
            role: role.to_string(),
        });
    }
    let limit = m
        .protocols
        .len()
        .saturating_mul(factorial_bound(decl.role_params.len()))
        .clamp(1, 10_000);
    let mut projector = Projector {
        module: m,
        role: role.to_string(),
        keys: HashMap::new(),
        active: Vec::new(),
        limit,
    };
    let subst: Subst = decl
        .role_params
        .iter()
        .map(|r| (r.name.clone(), r.name.clone()))
        .collect();
    // The entry point counts as a call, so a tail `do` of the same protocol
    // with the same roles loops back to the start.
    let key = RecKey(0);
    projector.keys.insert(
        KeyData {
            protocol: protocol.to_string(),
            args: decl.role_params.iter().map(|r| r.name.clone()).collect(),
            frames: Vec::new(),
        },
        key,
    );
    projector.active.push(key);
    let body = projector.project_block(&decl.body, &subst, &[])?;
    Ok(close_binder(key, body))
}

fn close_binder(key: RecKey, body: LocalType) -> LocalType {
    if body == LocalType::RecVar(key) {
        // The loop never involves this role.
        LocalType::End
    } else if body.mentions(key) {
        LocalType::Rec {
            key,
            body: Box::new(body),
        }
    } else {
        body
    }
}

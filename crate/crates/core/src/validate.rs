//! Well-formedness checks run before projection.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::ast::{GlobalProtocolDecl, GlobalStatement, Ident, ScribbleModule, Span};
use crate::efsm::to_efsm;
use crate::project::{project, ProjectError};

/// At most this many diagnostics are reported per run.
pub const MAX_DIAGNOSTICS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    fn error(code: &'static str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    fn warning(code: &'static str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `error[CODE] file:line:col message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}[{}] {}:{}:{} {}",
            self.severity, self.code, file, self.span.line, self.span.column, self.message
        )
    }
}

/// Maps a projection failure onto its diagnostic code.
pub fn project_error_code(e: &ProjectError) -> &'static str {
    match e {
        ProjectError::UnknownProtocol(_) | ProjectError::UnknownCallee { .. } => "DO_UNKNOWN",
        ProjectError::UnknownRole { .. } => "UNKNOWN_ROLE",
        ProjectError::Unmergeable { .. } => "UNMERGEABLE",
        ProjectError::ChooserNotSender { .. } => "CHOICE_SENDER",
        ProjectError::SelectPeers { .. } => "SELECT_PEER",
        ProjectError::DuplicateLabel { .. } => "DUP_LABEL",
        ProjectError::CallArity { .. } => "DO_ARITY",
        ProjectError::UnboundedRec { .. } => "UNBOUNDED_REC",
    }
}

struct Checker<'m> {
    module: &'m ScribbleModule,
    out: Vec<Diagnostic>,
    used_types: HashSet<&'m str>,
    labels: BTreeMap<String, &'m Ident>,
}

/// First interaction of a block: who acts, towards whom, with which label.
#[derive(Debug, Clone)]
struct Opening {
    sender: String,
    receiver: String,
    label: String,
    span: Span,
}

impl<'m> Checker<'m> {
    fn push(&mut self, d: Diagnostic) {
        self.out.push(d);
    }

    fn check_role(&mut self, proto: &GlobalProtocolDecl, role: &Ident) -> bool {
        if proto.role_params.iter().any(|r| r.name == role.name) {
            true
        } else {
            self.push(Diagnostic::error(
                "UNKNOWN_ROLE",
                role.span,
                format!("role `{}` is not a parameter of protocol `{}`", role, proto.name),
            ));
            false
        }
    }

    fn check_pair(&mut self, proto: &GlobalProtocolDecl, from: &Ident, to: &Ident, span: Span) {
        let a = self.check_role(proto, from);
        let b = self.check_role(proto, to);
        if a && b && from.name == to.name {
            self.push(Diagnostic::error(
                "SELF_MESSAGE",
                span,
                format!("role `{from}` cannot interact with itself"),
            ));
        }
    }

    fn check_label(&mut self, label: &'m Ident) {
        if label.name.starts_with("__") {
            self.push(Diagnostic::error(
                "RESERVED_LABEL",
                label.span,
                format!("labels starting with `__` are reserved (`{label}`)"),
            ));
        }
        let folded = label.name.to_ascii_lowercase();
        match self.labels.get(&folded) {
            Some(prev) if prev.name != label.name => {
                let msg = format!(
                    "label `{}` differs from `{}` only by case; both map to wire label `{}`",
                    label, prev, folded
                );
                self.push(Diagnostic::error("LABEL_CLASH", label.span, msg));
            }
            Some(_) => {}
            None => {
                self.labels.insert(folded, label);
            }
        }
    }

    fn statements(&mut self, proto: &'m GlobalProtocolDecl, stmts: &'m [GlobalStatement]) {
        for stmt in stmts {
            match stmt {
                GlobalStatement::Transfer {
                    label,
                    payloads,
                    from,
                    to,
                    span,
                } => {
                    self.check_label(label);
                    self.check_pair(proto, from, to, *span);
                    for p in payloads {
                        if self.module.type_decl(&p.name).is_some() {
                            self.used_types.insert(&p.name);
                        } else {
                            self.push(Diagnostic::error(
                                "UNKNOWN_ALIAS",
                                p.span,
                                format!("payload type `{p}` is not declared"),
                            ));
                        }
                    }
                }
                GlobalStatement::Connect { from, to, span } | GlobalStatement::Disconnect { from, to, span } => {
                    self.check_pair(proto, from, to, *span)
                }
                GlobalStatement::Choice { at, branches, .. } => {
                    if self.check_role(proto, at) {
                        self.choice(proto, at, branches);
                    }
                    for b in branches {
                        self.statements(proto, b);
                    }
                }
                GlobalStatement::Do {
                    protocol,
                    role_args,
                    span,
                } => {
                    for r in role_args {
                        self.check_role(proto, r);
                    }
                    let mut seen = HashSet::new();
                    for r in role_args {
                        if !seen.insert(&r.name) {
                            self.push(Diagnostic::error(
                                "DO_DUP_ROLE",
                                r.span,
                                format!("role `{r}` passed twice to `{protocol}`"),
                            ));
                        }
                    }
                    match self.module.protocol(&protocol.name) {
                        None => self.push(Diagnostic::error(
                            "DO_UNKNOWN",
                            protocol.span,
                            format!("protocol `{protocol}` is not declared"),
                        )),
                        Some(callee) if callee.role_params.len() != role_args.len() => self.push(Diagnostic::error(
                            "DO_ARITY",
                            *span,
                            format!(
                                "`{}` takes {} roles but {} were given",
                                protocol,
                                callee.role_params.len(),
                                role_args.len()
                            ),
                        )),
                        Some(_) => {}
                    }
                }
            }
        }
    }

    /// Openings of a block, looking through nested choices and `do` calls
    /// (`depth` bounds the latter). Role names are in the caller's vocabulary.
    fn openings(&self, stmts: &[GlobalStatement], subst: &[(String, String)], depth: usize) -> Vec<Opening> {
        let name = |i: &Ident| {
            subst
                .iter()
                .find(|(f, _)| *f == i.name)
                .map(|(_, c)| c.clone())
                .unwrap_or_else(|| i.name.clone())
        };
        let Some(first) = stmts.first() else {
            return Vec::new();
        };
        match first {
            GlobalStatement::Transfer {
                label, from, to, span, ..
            } => vec![Opening {
                sender: name(from),
                receiver: name(to),
                label: label.name.to_ascii_lowercase(),
                span: *span,
            }],
            GlobalStatement::Connect { from, to, span } => vec![Opening {
                sender: name(from),
                receiver: name(to),
                label: crate::efsm::CONNECT_LABEL.to_string(),
                span: *span,
            }],
            GlobalStatement::Disconnect { from, to, span } => vec![Opening {
                sender: name(from),
                receiver: name(to),
                label: crate::efsm::DISCONNECT_LABEL.to_string(),
                span: *span,
            }],
            GlobalStatement::Choice { branches, .. } => {
                branches.iter().flat_map(|b| self.openings(b, subst, depth)).collect()
            }
            GlobalStatement::Do {
                protocol,
                role_args,
                span,
            } => {
                let Some(callee) = self.module.protocol(&protocol.name) else {
                    return Vec::new();
                };
                if depth == 0 || callee.role_params.len() != role_args.len() {
                    return Vec::new();
                }
                let inner: Vec<(String, String)> = callee
                    .role_params
                    .iter()
                    .map(|p| p.name.clone())
                    .zip(role_args.iter().map(name))
                    .collect();
                // Report at the call site, which is inside the offending branch.
                self.openings(&callee.body, &inner, depth - 1)
                    .into_iter()
                    .map(|o| Opening { span: *span, ..o })
                    .collect()
            }
        }
    }

    fn choice(&mut self, proto: &GlobalProtocolDecl, at: &Ident, branches: &[Vec<GlobalStatement>]) {
        let identity: Vec<(String, String)> = proto
            .role_params
            .iter()
            .map(|r| (r.name.clone(), r.name.clone()))
            .collect();
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        for branch in branches {
            let openings = self.openings(branch, &identity, 8);
            if branch.is_empty() {
                self.push(Diagnostic::error(
                    "CHOICE_SENDER",
                    at.span,
                    format!("empty branch in choice at `{at}`"),
                ));
                continue;
            }
            let mut mine = BTreeSet::new();
            for o in &openings {
                if o.sender != at.name {
                    self.push(Diagnostic::error(
                        "CHOICE_SENDER",
                        o.span,
                        format!(
                            "branch of choice at `{}` starts with an action by `{}`; the first action must be sent by `{}`",
                            at, o.sender, at
                        ),
                    ));
                    continue;
                }
                let key = (o.receiver.clone(), o.label.clone());
                if seen.contains(&key) {
                    self.push(Diagnostic::error(
                        "DUP_LABEL",
                        o.span,
                        format!(
                            "label `{}` towards `{}` already opens another branch of this choice",
                            o.label, o.receiver
                        ),
                    ));
                }
                mine.insert(key);
            }
            seen.extend(mine);
        }
    }

    /// Sends between roles that have not connected, in protocols that use
    /// explicit connection actions.
    fn connections(&mut self, proto: &GlobalProtocolDecl) {
        fn uses_connect(stmts: &[GlobalStatement]) -> bool {
            stmts.iter().any(|s| match s {
                GlobalStatement::Connect { .. } => true,
                GlobalStatement::Choice { branches, .. } => branches.iter().any(|b| uses_connect(b)),
                _ => false,
            })
        }
        if !uses_connect(&proto.body) {
            return;
        }
        let mut open = BTreeSet::new();
        self.walk_connections(&proto.body, &mut open);
    }

    fn walk_connections(&mut self, stmts: &[GlobalStatement], open: &mut BTreeSet<(String, String)>) {
        let pair = |a: &Ident, b: &Ident| {
            if a.name <= b.name {
                (a.name.clone(), b.name.clone())
            } else {
                (b.name.clone(), a.name.clone())
            }
        };
        for stmt in stmts {
            match stmt {
                GlobalStatement::Transfer { from, to, span, .. } => {
                    if !open.contains(&pair(from, to)) {
                        self.push(Diagnostic::error(
                            "CONNECT_ORDER",
                            *span,
                            format!("`{from}` sends to `{to}` before they are connected"),
                        ));
                    }
                }
                GlobalStatement::Connect { from, to, span } => {
                    if !open.insert(pair(from, to)) {
                        self.push(Diagnostic::error(
                            "CONNECT_ORDER",
                            *span,
                            format!("`{from}` and `{to}` are already connected"),
                        ));
                    }
                }
                GlobalStatement::Disconnect { from, to, span } => {
                    if !open.remove(&pair(from, to)) {
                        self.push(Diagnostic::error(
                            "CONNECT_ORDER",
                            *span,
                            format!("`{from}` and `{to}` are not connected"),
                        ));
                    }
                }
                GlobalStatement::Choice { branches, .. } => {
                    let mut after: Option<BTreeSet<(String, String)>> = None;
                    for b in branches {
                        let mut local = open.clone();
                        self.walk_connections(b, &mut local);
                        after = Some(match after {
                            None => local,
                            Some(prev) => prev.intersection(&local).cloned().collect(),
                        });
                    }
                    if let Some(after) = after {
                        *open = after;
                    }
                }
                // Connections persist into the callee; its own body is checked separately.
                GlobalStatement::Do { .. } => return,
            }
        }
    }
}

/// Runs every well-formedness check over `m`. Diagnostics come back in source
/// order per check, capped at [`MAX_DIAGNOSTICS`]; errors block projection,
/// warnings do not.
pub fn check_well_formed(m: &ScribbleModule) -> Vec<Diagnostic> {
    let mut c = Checker {
        module: m,
        out: Vec::new(),
        used_types: HashSet::new(),
        labels: BTreeMap::new(),
    };

    let mut aliases = HashSet::new();
    for t in &m.type_decls {
        if !aliases.insert(&t.alias.name) {
            c.push(Diagnostic::error(
                "DUP_TYPE",
                t.span,
                format!("payload type `{}` declared twice", t.alias),
            ));
        }
        if t.target_path.trim().is_empty() {
            c.push(Diagnostic::error(
                "EMPTY_PATH",
                t.span,
                format!("payload type `{}` has an empty target path", t.alias),
            ));
        }
    }
    let mut names = HashSet::new();
    for p in &m.protocols {
        if !names.insert(&p.name.name) {
            c.push(Diagnostic::error(
                "DUP_PROTOCOL",
                p.name.span,
                format!("protocol `{}` declared twice", p.name),
            ));
        }
        let mut roles = HashSet::new();
        for r in &p.role_params {
            if !roles.insert(&r.name) {
                c.push(Diagnostic::error(
                    "DUP_ROLE",
                    r.span,
                    format!("role `{r}` declared twice"),
                ));
            }
        }
        if p.role_params.len() < 2 {
            c.push(Diagnostic::error(
                "FEW_ROLES",
                p.name.span,
                format!("protocol `{}` needs at least two roles", p.name),
            ));
        }
        c.statements(p, &p.body);
        c.connections(p);
    }
    for t in &m.type_decls {
        if !c.used_types.contains(t.alias.name.as_str()) {
            c.push(Diagnostic::warning(
                "UNUSED_TYPE",
                t.span,
                format!("payload type `{}` is never used", t.alias),
            ));
        }
    }

    // Mergeability, checked by projecting every role once everything else is sound.
    if !c.out.iter().any(Diagnostic::is_error) {
        let mut reported = HashSet::new();
        for p in &m.protocols {
            for r in &p.role_params {
                match project(m, &p.name.name, &r.name) {
                    Ok(local) => {
                        let violations = to_efsm(&local, &p.name.name, &r.name).check_invariants();
                        if let Some(v) = violations.first() {
                            c.push(Diagnostic::error(
                                "EFSM_INVARIANT",
                                p.name.span,
                                format!("endpoint machine for `{}` is malformed: {:?}", r, v),
                            ));
                        }
                    }
                    Err(e) => {
                        let code = project_error_code(&e);
                        let span = e.span().unwrap_or(p.name.span);
                        if reported.insert((code, span)) {
                            c.push(Diagnostic::error(code, span, format!("{e} (projecting `{r}`)")));
                        }
                    }
                }
            }
        }
    }

    c.out.truncate(MAX_DIAGNOSTICS);
    c.out
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

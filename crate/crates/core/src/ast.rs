//! Abstract syntax for the supported Scribble subset.
//!
//! Every node carries a [`Span`] pointing back into the source text. Structural
//! comparisons that should ignore positions go through [`ScribbleModule::without_spans`].

use std::fmt;

/// Location of a syntax node in the source text.
///
/// `start`/`end` are 0-based byte offsets; `line`/`column` describe `start` and are
/// 1-based, as printed in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, column: u32) -> Self {
        debug_assert!(start <= end);
        Span {
            start,
            end,
            line,
            column,
        }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        let (first, _) = if other.start < self.start {
            (other, self)
        } else {
            (self, other)
        };
        Span {
            start: first.start,
            end: self.end.max(other.end),
            line: first.line,
            column: first.column,
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// An identifier together with where it was written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident {
            name: name.into(),
            span,
        }
    }

    /// An identifier with an empty span, for building ASTs by hand.
    pub fn bare(name: impl Into<String>) -> Self {
        Ident::new(name, Span::default())
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScribbleModule {
    /// Dotted module name, one segment per entry.
    pub name: Vec<Ident>,
    pub type_decls: Vec<PayloadTypeDecl>,
    pub protocols: Vec<GlobalProtocolDecl>,
    pub span: Span,
}

/// `type Location as "Game.BattleShips.Location";`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadTypeDecl {
    pub alias: Ident,
    pub target_path: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalProtocolDecl {
    pub name: Ident,
    pub role_params: Vec<Ident>,
    pub body: Vec<GlobalStatement>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobalStatement {
    Transfer {
        label: Ident,
        payloads: Vec<Ident>,
        from: Ident,
        to: Ident,
        span: Span,
    },
    Choice {
        at: Ident,
        branches: Vec<Vec<GlobalStatement>>,
        span: Span,
    },
    Do {
        protocol: Ident,
        role_args: Vec<Ident>,
        span: Span,
    },
    Connect {
        from: Ident,
        to: Ident,
        span: Span,
    },
    Disconnect {
        from: Ident,
        to: Ident,
        span: Span,
    },
}

impl GlobalStatement {
    pub fn span(&self) -> Span {
        match self {
            GlobalStatement::Transfer { span, .. }
            | GlobalStatement::Choice { span, .. }
            | GlobalStatement::Do { span, .. }
            | GlobalStatement::Connect { span, .. }
            | GlobalStatement::Disconnect { span, .. } => *span,
        }
    }

    /// Every role identifier written in this statement, nested choices included.
    pub fn roles(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_roles(&mut out);
        out
    }

    fn collect_roles<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match self {
            GlobalStatement::Transfer { from, to, .. }
            | GlobalStatement::Connect { from, to, .. }
            | GlobalStatement::Disconnect { from, to, .. } => {
                out.push(from);
                out.push(to);
            }
            GlobalStatement::Choice { at, branches, .. } => {
                out.push(at);
                for stmt in branches.iter().flatten() {
                    stmt.collect_roles(out);
                }
            }
            GlobalStatement::Do { role_args, .. } => out.extend(role_args.iter()),
        }
    }
}

impl ScribbleModule {
    pub fn module_name(&self) -> String {
        self.name.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(".")
    }

    pub fn protocol(&self, name: &str) -> Option<&GlobalProtocolDecl> {
        self.protocols.iter().find(|p| p.name.name == name)
    }

    pub fn type_decl(&self, alias: &str) -> Option<&PayloadTypeDecl> {
        self.type_decls.iter().find(|t| t.alias.name == alias)
    }

    /// A copy of the module with every span reset, for position-insensitive comparison.
    pub fn without_spans(&self) -> ScribbleModule {
        fn id(i: &Ident) -> Ident {
            Ident::bare(i.name.clone())
        }
        fn ids(v: &[Ident]) -> Vec<Ident> {
            v.iter().map(id).collect()
        }
        fn stmts(v: &[GlobalStatement]) -> Vec<GlobalStatement> {
            v.iter().map(stmt).collect()
        }
        fn stmt(s: &GlobalStatement) -> GlobalStatement {
            let span = Span::default();
            match s {
                GlobalStatement::Transfer {
                    label,
                    payloads,
                    from,
                    to,
                    ..
                } => GlobalStatement::Transfer {
                    label: id(label),
                    payloads: ids(payloads),
                    from: id(from),
                    to: id(to),
                    span,
                },
                GlobalStatement::Choice { at, branches, .. } => GlobalStatement::Choice {
                    at: id(at),
                    branches: branches.iter().map(|b| stmts(b)).collect(),
                    span,
                },
                GlobalStatement::Do {
                    protocol, role_args, ..
                } => GlobalStatement::Do {
                    protocol: id(protocol),
                    role_args: ids(role_args),
                    span,
                },
                GlobalStatement::Connect { from, to, .. } => GlobalStatement::Connect {
                    from: id(from),
                    to: id(to),
                    span,
                },
                GlobalStatement::Disconnect { from, to, .. } => GlobalStatement::Disconnect {
                    from: id(from),
                    to: id(to),
                    span,
                },
            }
        }
        ScribbleModule {
            name: ids(&self.name),
            type_decls: self
                .type_decls
                .iter()
                .map(|t| PayloadTypeDecl {
                    alias: id(&t.alias),
                    target_path: t.target_path.clone(),
                    span: Span::default(),
                })
                .collect(),
            protocols: self
                .protocols
                .iter()
                .map(|p| GlobalProtocolDecl {
                    name: id(&p.name),
                    role_params: ids(&p.role_params),
                    body: stmts(&p.body),
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        }
    }

    /// Calls `f` on every span in the module.
    pub fn visit_spans(&self, mut f: impl FnMut(Span)) {
        fn stmt(s: &GlobalStatement, f: &mut dyn FnMut(Span)) {
            f(s.span());
            match s {
                GlobalStatement::Transfer {
                    label,
                    payloads,
                    from,
                    to,
                    ..
                } => {
                    f(label.span);
                    payloads.iter().for_each(|p| f(p.span));
                    f(from.span);
                    f(to.span);
                }
                GlobalStatement::Choice { at, branches, .. } => {
                    f(at.span);
                    for s in branches.iter().flatten() {
                        stmt(s, f);
                    }
                }
                GlobalStatement::Do {
                    protocol, role_args, ..
                } => {
                    f(protocol.span);
                    role_args.iter().for_each(|r| f(r.span));
                }
                GlobalStatement::Connect { from, to, .. } | GlobalStatement::Disconnect { from, to, .. } => {
                    f(from.span);
                    f(to.span);
                }
            }
        }
        f(self.span);
        self.name.iter().for_each(|n| f(n.span));
        for t in &self.type_decls {
            f(t.span);
            f(t.alias.span);
        }
        for p in &self.protocols {
            f(p.span);
            f(p.name.span);
            p.role_params.iter().for_each(|r| f(r.span));
            for s in &p.body {
                stmt(s, &mut f);
            }
        }
    }
}

//! Canonical pretty-printer for [`ScribbleModule`].

use std::fmt::Write;

use crate::ast::*;

const INDENT: &str = "  ";

pub fn render_module(m: &ScribbleModule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {};", m.module_name());
    if !m.type_decls.is_empty() {
        out.push('\n');
    }
    for decl in &m.type_decls {
        let _ = writeln!(
            out,
            "type {} as \"{}\";",
            decl.alias,
            decl.target_path.replace('\\', "\\\\").replace('"', "\\\"")
        );
    }
    for proto in &m.protocols {
        out.push('\n');
        let roles = proto
            .role_params
            .iter()
            .map(|r| format!("role {r}"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "global protocol {}({}) {{", proto.name, roles);
        render_block(&mut out, &proto.body, 1);
        out.push_str("}\n");
    }
    out
}

/// Renders one statement on a single logical line (choices span several).
pub fn render_statement(stmt: &GlobalStatement) -> String {
    let mut out = String::new();
    render_stmt(&mut out, stmt, 0);
    out.trim_end().to_string()
}

fn render_block(out: &mut String, stmts: &[GlobalStatement], depth: usize) {
    for stmt in stmts {
        render_stmt(out, stmt, depth);
    }
}

fn join(ids: &[Ident]) -> String {
    ids.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn render_stmt(out: &mut String, stmt: &GlobalStatement, depth: usize) {
    let pad = INDENT.repeat(depth);
    match stmt {
        GlobalStatement::Transfer {
            label,
            payloads,
            from,
            to,
            ..
        } => {
            let _ = writeln!(out, "{pad}{label}({}) from {from} to {to};", join(payloads));
        }
        GlobalStatement::Choice { at, branches, .. } => {
            let _ = write!(out, "{pad}choice at {at} ");
            for (i, branch) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" or ");
                }
                out.push_str("{\n");
                render_block(out, branch, depth + 1);
                let _ = write!(out, "{pad}}}");
            }
            out.push('\n');
        }
        GlobalStatement::Do {
            protocol, role_args, ..
        } => {
            let _ = writeln!(out, "{pad}do {protocol}({});", join(role_args));
        }
        GlobalStatement::Connect { from, to, .. } => {
            let _ = writeln!(out, "{pad}connect {from} to {to};");
        }
        GlobalStatement::Disconnect { from, to, .. } => {
            let _ = writeln!(out, "{pad}disconnect {from} and {to};");
        }
    }
}

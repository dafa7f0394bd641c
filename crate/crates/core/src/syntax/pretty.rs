//! Canonical source rendering of an AST. Reparsing the output yields the same
//! tree (positions aside).

use super::ast::*;
use num_complex::Complex64;
use std::fmt::Write;

pub fn program_to_string(p: &Program) -> String {
    let mut out = String::new();
    match p {
        Program::Statements(stmts) => write_stmt_list(&mut out, stmts, 0),
        Program::Modules(modules) => {
            for (i, m) in modules.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "module {} {{", m.name.name);
                write_stmt_list(&mut out, &m.body, 1);
                out.push_str("};\n");
            }
        }
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_stmt_list(out: &mut String, stmts: &[Stmt], level: usize) {
    for s in stmts {
        indent(out, level);
        write_stmt(out, s, level);
        out.push_str(";\n");
    }
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, 0);
    out
}

fn write_stmt(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Allocate { ty, name, init } => {
            let _ = write!(out, "new {} {} := {}", ty.as_str(), name.name, expr_to_string(init));
        }
        StmtKind::Assign { target, value } => {
            let _ = write!(out, "{} := {}", target.name, expr_to_string(value));
        }
        StmtKind::AssignMeasure { target, source } => {
            let _ = write!(out, "{} := measure {}", target.name, source.name);
        }
        StmtKind::MeasureBranch {
            qvar,
            then_branch,
            else_branch,
        } => {
            let _ = write!(out, "measure {} then ", qvar.name);
            write_stmt(out, then_branch, level);
            out.push_str(" else ");
            write_stmt(out, else_branch, level);
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = write!(out, "if {} then ", expr_to_string(cond));
            write_stmt(out, then_branch, level);
            if let Some(e) = else_branch {
                out.push_str(" else ");
                write_stmt(out, e, level);
            }
        }
        StmtKind::While { cond, body } => {
            let _ = write!(out, "while {} do ", expr_to_string(cond));
            write_stmt(out, body, level);
        }
        StmtKind::GateApply { targets, gate } => {
            let _ = write!(out, "{} *= {}", idents(targets), gate_to_string(gate));
        }
        StmtKind::Send { vars, dest } => {
            let _ = write!(out, "send {} to {}", idents(vars), dest.name);
        }
        StmtKind::Receive { bindings, source } => {
            let _ = write!(out, "receive {} from {}", context_to_string(bindings), source.name);
        }
        StmtKind::ProcDecl(decl) => {
            let _ = write!(out, "proc {}: {}", decl.name.name, context_to_string(&decl.params));
            if !decl.params.is_empty() {
                out.push(' ');
            }
            if let Some(ret) = &decl.returns {
                let _ = write!(out, "-> {} ", context_to_string(ret));
            }
            out.push_str("{\n");
            write_stmt_list(out, &decl.body, level + 1);
            indent(out, level);
            out.push_str("} in ");
            write_stmt(out, &decl.scope, level);
        }
        StmtKind::ProcCall { results, name, args } => {
            if let Some(r) = results {
                let _ = write!(out, "({}) := ", idents(r));
            }
            let args: Vec<String> = args.iter().map(expr_to_string).collect();
            let _ = write!(out, "call {}({})", name.name, args.join(", "));
        }
        StmtKind::Print(PrintArg::Text(t)) => {
            let _ = write!(out, "print {}", quote(t));
        }
        StmtKind::Print(PrintArg::Expr(e)) => {
            let _ = write!(out, "print {}", expr_to_string(e));
        }
        StmtKind::Dump(vars) => {
            let _ = write!(out, "dump {}", idents(vars));
        }
        StmtKind::Skip => out.push_str("skip"),
        StmtKind::Block(stmts) => {
            out.push_str("{\n");
            write_stmt_list(out, stmts, level + 1);
            indent(out, level);
            out.push('}');
        }
    }
}

fn quote(s: &str) -> String {
    let mut q = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn idents(ids: &[Ident]) -> String {
    ids.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
}

pub fn context_to_string(params: &[Param]) -> String {
    params
        .iter()
        .map(|p| format!("{}:{}", p.name.name, p.ty.as_str()))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn gate_to_string(g: &Gate) -> String {
    match g {
        Gate::H => "H".into(),
        Gate::Not => "Not".into(),
        Gate::CNot => "CNot".into(),
        Gate::Phase(e) => format!("Phase {}", expr_to_string(e)),
        Gate::FT(n) => format!("FT({n})"),
        Gate::Matrix(entries) => {
            let parts: Vec<String> = entries.iter().map(complex_literal).collect();
            format!("[[{}]]", parts.join(", "))
        }
    }
}

fn float_literal(v: f64) -> String {
    format!("{v:?}")
}

fn complex_literal(c: &Complex64) -> String {
    if c.im == 0.0 {
        float_literal(c.re)
    } else if c.re == 0.0 {
        format!("{}i", float_literal(c.im))
    } else {
        format!("{} + {}i", float_literal(c.re), float_literal(c.im))
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Float(v) => out.push_str(&float_literal(*v)),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Paren(inner) => {
            out.push('(');
            write_expr(out, inner, 0);
            out.push(')');
        }
        ExprKind::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            write_expr(out, inner, 6);
        }
        ExprKind::Binary(op, a, b) => {
            let prec = op.precedence();
            let wrap = prec < min_prec;
            if wrap {
                out.push('(');
            }
            write_expr(out, a, prec);
            let _ = write!(out, " {} ", op.as_str());
            write_expr(out, b, prec + 1);
            if wrap {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::syntax::{parse_source, pretty::program_to_string};

    #[test]
    fn pretty_is_a_fixpoint() {
        let src = "new int loop := 10;
            while (loop > 5) do { print loop; loop := loop - 1; };
            if (loop = 3) then { print \"3\"; } else { print \"Nicht 3\"; };
            new qbit a := 0; new qbit b := 0;
            a, b *= [[0.5, 0.5i, -0.5, -0.5 + 0.25i, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]];
            a *= Phase -0.5; print -(1 - 2) * 3;";
        let once = program_to_string(&parse_source(src).unwrap());
        let twice = program_to_string(&parse_source(&once).unwrap());
        assert_eq!(once, twice);
    }
}

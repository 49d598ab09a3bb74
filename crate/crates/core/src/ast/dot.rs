//! Graphviz DOT export of a program tree.

use std::fmt::Write;

use super::{Expr, Program, Stmt};

/// Renders `program` as a `digraph ast { ... }` with one graph node per
/// statement or expression node and one edge per parent-child link.
pub fn to_dot(program: &Program) -> String {
    let mut out = String::from("digraph ast {\n  node [shape=box, fontname=\"monospace\"];\n");
    let mut next = 0usize;
    for stmt in &program.statements {
        stmt_node(stmt, None, &mut next, &mut out);
    }
    out.push_str("}\n");
    out
}

fn emit(label: &str, parent: Option<usize>, next: &mut usize, out: &mut String) -> usize {
    let id = *next;
    *next += 1;
    let _ = writeln!(out, "  n{id} [label=\"{}\"];", escape(label));
    if let Some(p) = parent {
        let _ = writeln!(out, "  n{p} -> n{id};");
    }
    id
}

fn stmt_node(stmt: &Stmt, parent: Option<usize>, next: &mut usize, out: &mut String) {
    match stmt {
        Stmt::ExprStmt(e) => {
            let id = emit("ExprStmt", parent, next, out);
            expr_node(e, id, next, out);
        }
        Stmt::Return(e) => {
            let id = emit("Return", parent, next, out);
            expr_node(e, id, next, out);
        }
        Stmt::VarDecl { tag, name, init } => {
            let id = emit(&format!("VarDecl {tag} {name}"), parent, next, out);
            expr_node(init, id, next, out);
        }
        Stmt::FuncDecl(f) => {
            let params: Vec<String> = f.params.iter().map(|p| format!("{} {}", p.tag, p.name)).collect();
            let label = format!("FuncDecl {} {}({})", f.ret, f.name, params.join(", "));
            let id = emit(&label, parent, next, out);
            for s in &f.body {
                stmt_node(s, Some(id), next, out);
            }
        }
    }
}

fn expr_node(e: &Expr, parent: usize, next: &mut usize, out: &mut String) {
    let label = match e {
        Expr::IntLiteral(v) => format!("IntLiteral {v}"),
        Expr::DoubleLiteral(v) => format!("DoubleLiteral {v:?}"),
        Expr::Identifier(n) => format!("Identifier {n}"),
        Expr::BinaryOp { op, .. } => format!("BinaryOp {}", op.symbol()),
        Expr::UnaryNeg(_) => "UnaryNeg".to_string(),
        Expr::Call { callee, .. } => format!("Call {callee}"),
        Expr::Assignment { target, .. } => format!("Assignment {target}"),
    };
    let id = emit(&label, Some(parent), next, out);
    for child in e.children() {
        expr_node(child, id, next, out);
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Number of `nN [label=...]` node lines in a DOT text produced by [`to_dot`].
#[cfg(test)]
pub(crate) fn count_nodes(dot: &str) -> usize {
    dot.lines()
        .filter(|l| l.trim_start().starts_with('n') && l.contains("[label="))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_return() {
        let p = Program::new(vec![Stmt::Return(Expr::int(1))]);
        let dot = to_dot(&p);
        assert!(dot.starts_with("digraph ast {"));
        assert_eq!(count_nodes(&dot), 2);
        assert_eq!(dot.matches("->").count(), 1);
    }

    #[test]
    fn empty_program() {
        let dot = to_dot(&Program::default());
        assert_eq!(count_nodes(&dot), 0);
        assert!(dot.trim_end().ends_with('}'));
    }
}

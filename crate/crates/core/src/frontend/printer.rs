//! Canonical unparser: `parse_source(&pretty_print(p)) == p` for programs whose
//! expression statements do not begin with `(` or `-` (such a statement would
//! glue onto the end of the previous one, since the language has no
//! statement terminator).

use std::fmt::Write;

use crate::ast::{Expr, Program, Stmt};

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for stmt in &program.statements {
        write_stmt(stmt, 0, &mut out);
    }
    out
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_stmt(stmt: &Stmt, indent: usize, out: &mut String) {
    let pad = "    ".repeat(indent);
    out.push_str(&pad);
    match stmt {
        Stmt::ExprStmt(e) => write_expr(e, out),
        Stmt::Return(e) => {
            out.push_str("return ");
            write_expr(e, out);
        }
        Stmt::VarDecl { tag, name, init } => {
            let _ = write!(out, "{tag} {name} = ");
            write_expr(init, out);
        }
        Stmt::FuncDecl(f) => {
            let params: Vec<String> = f.params.iter().map(|p| format!("{} {}", p.tag, p.name)).collect();
            let _ = writeln!(out, "{} {}({}) {{", f.ret, f.name, params.join(", "));
            for s in &f.body {
                write_stmt(s, indent + 1, out);
            }
            out.push_str(&pad);
            out.push('}');
        }
    }
    out.push('\n');
}

/// Formats a double so that it lexes as a double literal and parses back to the same bits.
pub fn format_double(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::IntLiteral(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::DoubleLiteral(v) => out.push_str(&format_double(*v)),
        Expr::Identifier(n) => out.push_str(n),
        Expr::Assignment { target, value } => {
            let _ = write!(out, "{target} = ");
            write_expr(value, out);
        }
        Expr::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, out);
            }
            out.push(')');
        }
        Expr::UnaryNeg(operand) => {
            out.push('-');
            // A literal right after `-` would be read back as a negative literal.
            let wrap = matches!(
                **operand,
                Expr::IntLiteral(_) | Expr::DoubleLiteral(_) | Expr::BinaryOp { .. } | Expr::Assignment { .. }
            );
            write_wrapped(operand, wrap, out);
        }
        Expr::BinaryOp { op, lhs, rhs } => {
            let prec = op.precedence();
            let lhs_wrap = match &**lhs {
                Expr::BinaryOp { op: inner, .. } => inner.precedence() < prec,
                Expr::Assignment { .. } => true,
                _ => false,
            };
            let rhs_wrap = match &**rhs {
                Expr::BinaryOp { op: inner, .. } => inner.precedence() <= prec,
                Expr::Assignment { .. } => true,
                _ => false,
            };
            write_wrapped(lhs, lhs_wrap, out);
            let _ = write!(out, " {} ", op.symbol());
            write_wrapped(rhs, rhs_wrap, out);
        }
    }
}

fn write_wrapped(e: &Expr, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::BinOp;
    use crate::frontend::parse_source;

    fn round_trip(e: Expr) {
        let p = Program::new(vec![Stmt::Return(e)]);
        let text = pretty_print(&p);
        assert_eq!(parse_source(&text).unwrap(), p, "{text}");
    }

    #[test]
    fn tricky_shapes_round_trip() {
        round_trip(Expr::negate(Expr::int(5)));
        round_trip(Expr::negate(Expr::int(-5)));
        round_trip(Expr::negate(Expr::negate(Expr::ident("x"))));
        round_trip(Expr::binary(
            BinOp::Sub,
            Expr::int(1),
            Expr::binary(BinOp::Sub, Expr::int(2), Expr::int(3)),
        ));
        round_trip(Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::double(-0.25), Expr::int(2)),
            Expr::assign("a", Expr::int(3)),
        ));
        round_trip(Expr::double(1e21));
        round_trip(Expr::double(1e-9));
    }

    #[test]
    fn doubles_keep_a_fraction() {
        assert_eq!(format_double(2.0), "2.0");
        assert_eq!(format_double(-0.5), "-0.5");
    }
}

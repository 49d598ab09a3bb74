//! Abstract syntax tree for the toy language and the evolved programs.
//!
//! Expressions and statements are plain owned trees. Every operation that
//! "changes" a tree returns a new one, so a tree handed to an executor or to a
//! genetic operator is never mutated behind the caller's back.
//!
//! Subtrees of an [`Expr`] are addressed by their pre-order index, the root
//! being index 0. Genetic operators use this addressing to pick crossover and
//! mutation points.

mod dot;
mod typeck;

use std::fmt;

pub use dot::to_dot;
pub use typeck::{type_check, type_check_with, FunctionInfo, TypeError, TypeErrors, TypedProgram};

/// Name of the function that, when present, becomes the parameterised entry point.
pub const GP_MAIN: &str = "gp_main";

/// The two value types of the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeTag {
    Int,
    Double,
}

impl TypeTag {
    /// Result tag of a binary arithmetic operation with implicit Int→Double promotion.
    pub fn promote(self, other: TypeTag) -> TypeTag {
        if self == TypeTag::Double || other == TypeTag::Double {
            TypeTag::Double
        } else {
            TypeTag::Int
        }
    }

    /// Whether a value of tag `self` may be stored where `target` is expected.
    pub fn converts_to(self, target: TypeTag) -> bool {
        self == target || (self == TypeTag::Int && target == TypeTag::Double)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            TypeTag::Int => "int",
            TypeTag::Double => "double",
        }
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub const ALL: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    IntLiteral(i64),
    DoubleLiteral(f64),
    Identifier(String),
    BinaryOp { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    UnaryNeg(Box<Expr>),
    Call { callee: String, args: Vec<Expr> },
    Assignment { target: String, value: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub tag: TypeTag,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDecl {
    pub ret: TypeTag,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    ExprStmt(Expr),
    VarDecl { tag: TypeTag, name: String, init: Expr },
    FuncDecl(FuncDecl),
    Return(Expr),
}

/// A whole source unit. Top-level statements that are not function
/// declarations form the body of the implicit entry function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub statements: Vec<Stmt>,
}

/// Node count and height of a tree. A single node has size 1 and depth 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    pub size: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("subtree index {index} out of range for a tree of {size} nodes")]
pub struct IndexError {
    pub index: usize,
    pub size: usize,
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::IntLiteral(v)
    }

    pub fn double(v: f64) -> Expr {
        Expr::DoubleLiteral(v)
    }

    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Identifier(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::BinaryOp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn negate(operand: Expr) -> Expr {
        Expr::UnaryNeg(Box::new(operand))
    }

    pub fn call(callee: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Call {
            callee: callee.into(),
            args,
        }
    }

    pub fn assign(target: impl Into<String>, value: Expr) -> Expr {
        Expr::Assignment {
            target: target.into(),
            value: Box::new(value),
        }
    }

    /// Short variant name, used by DOT labels and diagnostics.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Expr::IntLiteral(_) => "IntLiteral",
            Expr::DoubleLiteral(_) => "DoubleLiteral",
            Expr::Identifier(_) => "Identifier",
            Expr::BinaryOp { .. } => "BinaryOp",
            Expr::UnaryNeg(_) => "UnaryNeg",
            Expr::Call { .. } => "Call",
            Expr::Assignment { .. } => "Assignment",
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children().next().is_none()
    }

    /// Direct children in evaluation (and pre-order) order.
    pub fn children(&self) -> Children<'_> {
        match self {
            Expr::IntLiteral(_) | Expr::DoubleLiteral(_) | Expr::Identifier(_) => Children::Fixed([None, None]),
            Expr::BinaryOp { lhs, rhs, .. } => Children::Fixed([Some(lhs), Some(rhs)]),
            Expr::UnaryNeg(operand) => Children::Fixed([Some(operand), None]),
            Expr::Assignment { value, .. } => Children::Fixed([Some(value), None]),
            Expr::Call { args, .. } => Children::Slice(args.iter()),
        }
    }

    pub fn metrics(&self) -> Metrics {
        let (size, depth) = self.children().fold((1, 0), |(size, depth), child| {
            let m = child.metrics();
            (size + m.size, depth.max(m.depth))
        });
        Metrics { size, depth: depth + 1 }
    }

    pub fn size(&self) -> usize {
        self.metrics().size
    }

    pub fn depth(&self) -> usize {
        self.metrics().depth
    }

    /// Pre-order traversal of this tree, root first.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// Returns the `k`-th node in pre-order (root = 0).
    pub fn select_subtree(&self, k: usize) -> Result<&Expr, IndexError> {
        let mut seen = 0;
        for node in self.preorder() {
            if seen == k {
                return Ok(node);
            }
            seen += 1;
        }
        Err(IndexError { index: k, size: seen })
    }

    /// 1-based depth of the `k`-th pre-order node (the root sits at depth 1).
    pub fn depth_of(&self, k: usize) -> Result<usize, IndexError> {
        let mut stack = vec![(self, 1usize)];
        let mut seen = 0;
        while let Some((node, depth)) = stack.pop() {
            if seen == k {
                return Ok(depth);
            }
            seen += 1;
            let children: Vec<&Expr> = node.children().collect();
            stack.extend(children.into_iter().rev().map(|c| (c, depth + 1)));
        }
        Err(IndexError { index: k, size: seen })
    }

    /// Returns a copy of this tree whose `k`-th pre-order node is `replacement`.
    pub fn replace_subtree(&self, k: usize, replacement: &Expr) -> Result<Expr, IndexError> {
        let mut remaining = k;
        match rebuild(self, &mut remaining, replacement) {
            Some(tree) => Ok(tree),
            None => Err(IndexError {
                index: k,
                size: self.size(),
            }),
        }
    }
}

/// Copies `node`, substituting the subtree reached when `remaining` counts down
/// to zero. Returns `None` if the index lies outside `node`.
fn rebuild(node: &Expr, remaining: &mut usize, replacement: &Expr) -> Option<Expr> {
    if *remaining == 0 {
        return Some(replacement.clone());
    }
    *remaining -= 1;
    let hit = |child: &Expr, remaining: &mut usize| -> Result<Expr, Expr> {
        rebuild(child, remaining, replacement).ok_or_else(|| child.clone())
    };
    match node {
        Expr::IntLiteral(_) | Expr::DoubleLiteral(_) | Expr::Identifier(_) => None,
        Expr::UnaryNeg(operand) => hit(operand, remaining).ok().map(Expr::negate),
        Expr::Assignment { target, value } => hit(value, remaining).ok().map(|v| Expr::assign(target.clone(), v)),
        Expr::BinaryOp { op, lhs, rhs } => match hit(lhs, remaining) {
            Ok(new_lhs) => Some(Expr::binary(*op, new_lhs, (**rhs).clone())),
            Err(old_lhs) => hit(rhs, remaining)
                .ok()
                .map(|new_rhs| Expr::binary(*op, old_lhs, new_rhs)),
        },
        Expr::Call { callee, args } => {
            let mut out = Vec::with_capacity(args.len());
            let mut found = false;
            for arg in args {
                if found {
                    out.push(arg.clone());
                    continue;
                }
                match hit(arg, remaining) {
                    Ok(new) => {
                        found = true;
                        out.push(new);
                    }
                    Err(old) => out.push(old),
                }
            }
            found.then(|| Expr::call(callee.clone(), out))
        }
    }
}

/// Iterator over the direct children of an [`Expr`].
pub enum Children<'a> {
    Fixed([Option<&'a Expr>; 2]),
    Slice(std::slice::Iter<'a, Expr>),
}

impl<'a> Iterator for Children<'a> {
    type Item = &'a Expr;

    fn next(&mut self) -> Option<&'a Expr> {
        match self {
            Children::Fixed(slots) => {
                let next = slots[0].take();
                slots.swap(0, 1);
                next
            }
            Children::Slice(iter) => iter.next(),
        }
    }
}

/// Pre-order iterator over an expression tree.
pub struct Preorder<'a> {
    stack: Vec<&'a Expr>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a Expr;

    fn next(&mut self) -> Option<&'a Expr> {
        let node = self.stack.pop()?;
        let start = self.stack.len();
        self.stack.extend(node.children());
        self.stack[start..].reverse();
        Some(node)
    }
}

impl Stmt {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Stmt::ExprStmt(_) => "ExprStmt",
            Stmt::VarDecl { .. } => "VarDecl",
            Stmt::FuncDecl(_) => "FuncDecl",
            Stmt::Return(_) => "Return",
        }
    }

    pub fn metrics(&self) -> Metrics {
        let child = match self {
            Stmt::ExprStmt(e) | Stmt::Return(e) | Stmt::VarDecl { init: e, .. } => e.metrics(),
            Stmt::FuncDecl(f) => block_metrics(&f.body),
        };
        Metrics {
            size: child.size + 1,
            depth: child.depth + 1,
        }
    }

    /// Visits every expression reachable from this statement in pre-order.
    pub fn for_each_expr<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Stmt::ExprStmt(e) | Stmt::Return(e) | Stmt::VarDecl { init: e, .. } => e.preorder().for_each(&mut *f),
            Stmt::FuncDecl(func) => {
                for stmt in &func.body {
                    stmt.for_each_expr(f);
                }
            }
        }
    }
}

fn block_metrics(stmts: &[Stmt]) -> Metrics {
    stmts.iter().fold(Metrics::default(), |acc, s| {
        let m = s.metrics();
        Metrics {
            size: acc.size + m.size,
            depth: acc.depth.max(m.depth),
        }
    })
}

impl Program {
    pub fn new(statements: Vec<Stmt>) -> Self {
        Program { statements }
    }

    /// Size and depth over all statement and expression nodes. The program
    /// itself is not counted, so the empty program measures `(0, 0)`.
    pub fn metrics(&self) -> Metrics {
        block_metrics(&self.statements)
    }

    pub fn functions(&self) -> impl Iterator<Item = &FuncDecl> {
        self.statements.iter().filter_map(|s| match s {
            Stmt::FuncDecl(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FuncDecl> {
        self.functions().find(|f| f.name == name)
    }

    /// Top-level statements other than function declarations.
    pub fn entry_statements(&self) -> impl Iterator<Item = &Stmt> {
        self.statements.iter().filter(|s| !matches!(s, Stmt::FuncDecl(_)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_plus_two() -> Expr {
        Expr::binary(BinOp::Add, Expr::int(1), Expr::int(2))
    }

    #[test]
    fn literal_metrics() {
        assert_eq!(Expr::int(5).metrics(), Metrics { size: 1, depth: 1 });
    }

    #[test]
    fn nested_metrics() {
        let e = Expr::binary(
            BinOp::Add,
            Expr::int(1),
            Expr::binary(BinOp::Mul, Expr::int(2), Expr::int(3)),
        );
        assert_eq!(e.metrics(), Metrics { size: 5, depth: 3 });
    }

    #[test]
    fn empty_program_metrics() {
        assert_eq!(Program::default().metrics(), Metrics::default());
    }

    #[test]
    fn select_by_preorder() {
        let t = one_plus_two();
        assert_eq!(t.select_subtree(0).unwrap(), &t);
        assert_eq!(t.select_subtree(1).unwrap(), &Expr::int(1));
        assert_eq!(t.select_subtree(2).unwrap(), &Expr::int(2));
        assert_eq!(t.select_subtree(3), Err(IndexError { index: 3, size: 3 }));
    }

    #[test]
    fn replace_root_returns_replacement() {
        let t = one_plus_two();
        let r = Expr::ident("x");
        assert_eq!(t.replace_subtree(0, &r).unwrap(), r);
    }

    #[test]
    fn replace_leaves_original_untouched() {
        let t = one_plus_two();
        let copy = t.clone();
        let out = t.replace_subtree(2, &Expr::int(9)).unwrap();
        assert_eq!(t, copy);
        assert_eq!(out, Expr::binary(BinOp::Add, Expr::int(1), Expr::int(9)));
        assert!(t.replace_subtree(3, &Expr::int(9)).is_err());
    }

    #[test]
    fn replace_inside_call_arguments() {
        let t = Expr::call("f", vec![Expr::negate(Expr::ident("a")), Expr::int(2), Expr::int(3)]);
        // pre-order: 0 call, 1 neg, 2 a, 3 lit 2, 4 lit 3
        let out = t.replace_subtree(3, &Expr::ident("z")).unwrap();
        assert_eq!(
            out,
            Expr::call(
                "f",
                vec![Expr::negate(Expr::ident("a")), Expr::ident("z"), Expr::int(3)]
            )
        );
    }

    #[test]
    fn depth_of_nodes() {
        let e = Expr::binary(
            BinOp::Add,
            Expr::int(1),
            Expr::binary(BinOp::Mul, Expr::int(2), Expr::int(3)),
        );
        let depths: Vec<usize> = (0..5).map(|k| e.depth_of(k).unwrap()).collect();
        assert_eq!(depths, vec![1, 2, 2, 3, 3]);
        assert!(e.depth_of(5).is_err());
    }

    #[test]
    fn stmt_metrics_count_statement_nodes() {
        let p = Program::new(vec![Stmt::Return(Expr::int(1))]);
        assert_eq!(p.metrics(), Metrics { size: 2, depth: 2 });
    }
}

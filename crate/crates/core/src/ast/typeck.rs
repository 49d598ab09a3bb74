//! Static type checking and name resolution.
//!
//! Scoping: a function body sees its parameters, its own locals and every
//! top-level function (declared before or after it). Top-level variables are
//! locals of the implicit entry and are invisible inside functions.

use std::collections::HashMap;
use std::fmt;

use super::{BinOp, Expr, FuncDecl, Program, Stmt, TypeTag, GP_MAIN};
use crate::exec::NativeRegistry;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String },
    #[error("unknown function `{name}`")]
    UnknownFunction { name: String },
    #[error("function `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch {
        context: String,
        expected: TypeTag,
        found: TypeTag,
    },
    #[error("duplicate definition of `{name}`")]
    DuplicateDefinition { name: String },
    #[error("function `{name}` declared inside another function")]
    NestedFunction { name: String },
}

/// Every error found in one program, in discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeErrors(pub Vec<TypeError>);

impl fmt::Display for TypeErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "type error: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeErrors {}

/// Signature and call-graph facts about one declared function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    /// Index of the declaring statement in `Program::statements`.
    pub stmt_index: usize,
    pub params: Vec<TypeTag>,
    pub ret: TypeTag,
    /// Whether the function can reach itself through calls. Only such
    /// functions count toward the recursion limit.
    pub recursive: bool,
}

/// A program that passed [`type_check`], with a tag for every expression.
///
/// Tags are stored in program pre-order: top-level statements in order, each
/// statement's expressions in pre-order (function bodies included). Consumers
/// that walk a statement node-first, children left-to-right can pull tags in
/// lock-step starting from [`TypedProgram::tag_offset`].
#[derive(Debug, Clone)]
pub struct TypedProgram {
    program: Program,
    tags: Vec<TypeTag>,
    offsets: Vec<usize>,
    functions: Vec<FunctionInfo>,
    by_name: HashMap<String, usize>,
    entry_tag: TypeTag,
}

impl TypedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn into_program(self) -> Program {
        self.program
    }

    /// All expression tags in program pre-order.
    pub fn tags(&self) -> &[TypeTag] {
        &self.tags
    }

    /// Position in [`TypedProgram::tags`] of the first expression of top-level statement `stmt`.
    pub fn tag_offset(&self, stmt: usize) -> usize {
        self.offsets[stmt]
    }

    /// Tag of the implicit entry's result.
    pub fn entry_tag(&self) -> TypeTag {
        self.entry_tag
    }

    pub fn functions(&self) -> &[FunctionInfo] {
        &self.functions
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn function_info(&self, name: &str) -> Option<&FunctionInfo> {
        self.function_index(name).map(|i| &self.functions[i])
    }

    pub fn decl(&self, index: usize) -> &FuncDecl {
        match &self.program.statements[self.functions[index].stmt_index] {
            Stmt::FuncDecl(f) => f,
            _ => unreachable!("function table points at a non-function statement"),
        }
    }

    /// The `gp_main` function, if the program defines one.
    pub fn gp_main(&self) -> Option<&FunctionInfo> {
        self.function_info(GP_MAIN)
    }
}

/// Type checks `program` without any native functions.
pub fn type_check(program: Program) -> Result<TypedProgram, TypeErrors> {
    type_check_with(program, &NativeRegistry::new())
}

/// Type checks `program`, resolving calls against its own functions and then `natives`.
pub fn type_check_with(program: Program, natives: &NativeRegistry) -> Result<TypedProgram, TypeErrors> {
    let mut checker = Checker {
        natives,
        functions: Vec::new(),
        by_name: HashMap::new(),
        tags: Vec::new(),
        errors: Vec::new(),
    };
    checker.collect_signatures(&program);

    let mut offsets = Vec::with_capacity(program.statements.len());
    let mut entry_scope = Scope::default();
    let mut entry_tag: Option<TypeTag> = None;
    for stmt in &program.statements {
        offsets.push(checker.tags.len());
        match stmt {
            Stmt::FuncDecl(f) => checker.check_function(f),
            other => {
                if let Some(tag) = checker.check_stmt(other, &mut entry_scope, None) {
                    match entry_tag {
                        None => entry_tag = Some(tag),
                        Some(prev) if prev != tag => checker.errors.push(TypeError::TypeMismatch {
                            context: "top-level return".into(),
                            expected: prev,
                            found: tag,
                        }),
                        Some(_) => {}
                    }
                }
            }
        }
    }

    if !checker.errors.is_empty() {
        return Err(TypeErrors(checker.errors));
    }
    let recursive = find_recursive(&program, &checker.by_name);
    let mut functions = checker.functions;
    for (info, rec) in functions.iter_mut().zip(recursive) {
        info.recursive = rec;
    }
    Ok(TypedProgram {
        program,
        tags: checker.tags,
        offsets,
        functions,
        by_name: checker.by_name,
        entry_tag: entry_tag.unwrap_or(TypeTag::Int),
    })
}

#[derive(Default)]
struct Scope {
    vars: Vec<(String, TypeTag)>,
}

impl Scope {
    fn lookup(&self, name: &str) -> Option<TypeTag> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, t)| *t)
    }

    fn declare(&mut self, name: &str, tag: TypeTag) -> bool {
        if self.lookup(name).is_some() {
            return false;
        }
        self.vars.push((name.to_string(), tag));
        true
    }
}

struct Checker<'a> {
    natives: &'a NativeRegistry,
    functions: Vec<FunctionInfo>,
    by_name: HashMap<String, usize>,
    tags: Vec<TypeTag>,
    errors: Vec<TypeError>,
}

impl Checker<'_> {
    fn collect_signatures(&mut self, program: &Program) {
        for (i, stmt) in program.statements.iter().enumerate() {
            let Stmt::FuncDecl(f) = stmt else { continue };
            if self.by_name.contains_key(&f.name) || self.natives.get(&f.name).is_some() {
                self.errors
                    .push(TypeError::DuplicateDefinition { name: f.name.clone() });
                continue;
            }
            self.by_name.insert(f.name.clone(), self.functions.len());
            self.functions.push(FunctionInfo {
                name: f.name.clone(),
                stmt_index: i,
                params: f.params.iter().map(|p| p.tag).collect(),
                ret: f.ret,
                recursive: false,
            });
        }
    }

    fn check_function(&mut self, f: &FuncDecl) {
        let mut scope = Scope::default();
        for p in &f.params {
            if !scope.declare(&p.name, p.tag) {
                self.errors
                    .push(TypeError::DuplicateDefinition { name: p.name.clone() });
            }
        }
        for stmt in &f.body {
            self.check_stmt(stmt, &mut scope, Some(f.ret));
        }
    }

    /// Checks one statement; returns the tag of a `return` when outside a function.
    fn check_stmt(&mut self, stmt: &Stmt, scope: &mut Scope, fn_ret: Option<TypeTag>) -> Option<TypeTag> {
        match stmt {
            Stmt::ExprStmt(e) => {
                self.check_expr(e, scope);
                None
            }
            Stmt::VarDecl { tag, name, init } => {
                let found = self.check_expr(init, scope);
                self.expect(found, *tag, || format!("initializer of `{name}`"));
                if !scope.declare(name, *tag) {
                    self.errors.push(TypeError::DuplicateDefinition { name: name.clone() });
                }
                None
            }
            Stmt::Return(e) => {
                let found = self.check_expr(e, scope);
                match fn_ret {
                    Some(ret) => {
                        self.expect(found, ret, || "return value".into());
                        None
                    }
                    None => Some(found),
                }
            }
            Stmt::FuncDecl(f) => {
                self.errors.push(TypeError::NestedFunction { name: f.name.clone() });
                // Keep the tag stream aligned with the program pre-order.
                let mut inner = Scope::default();
                for p in &f.params {
                    inner.declare(&p.name, p.tag);
                }
                for s in &f.body {
                    self.check_stmt(s, &mut inner, Some(f.ret));
                }
                None
            }
        }
    }

    fn expect(&mut self, found: TypeTag, expected: TypeTag, context: impl FnOnce() -> String) {
        if !found.converts_to(expected) {
            self.errors.push(TypeError::TypeMismatch {
                context: context(),
                expected,
                found,
            });
        }
    }

    fn check_expr(&mut self, e: &Expr, scope: &Scope) -> TypeTag {
        let slot = self.tags.len();
        self.tags.push(TypeTag::Int);
        let tag = match e {
            Expr::IntLiteral(_) => TypeTag::Int,
            Expr::DoubleLiteral(_) => TypeTag::Double,
            Expr::Identifier(name) => scope.lookup(name).unwrap_or_else(|| {
                self.errors.push(TypeError::UnknownIdentifier { name: name.clone() });
                TypeTag::Int
            }),
            Expr::BinaryOp { op, lhs, rhs } => {
                let l = self.check_expr(lhs, scope);
                let r = self.check_expr(rhs, scope);
                if *op == BinOp::Rem {
                    for side in [l, r] {
                        if side == TypeTag::Double {
                            self.errors.push(TypeError::TypeMismatch {
                                context: "operand of `%`".into(),
                                expected: TypeTag::Int,
                                found: TypeTag::Double,
                            });
                        }
                    }
                    TypeTag::Int
                } else {
                    l.promote(r)
                }
            }
            Expr::UnaryNeg(operand) => self.check_expr(operand, scope),
            Expr::Assignment { target, value } => {
                let found = self.check_expr(value, scope);
                match scope.lookup(target) {
                    Some(tag) => {
                        self.expect(found, tag, || format!("assignment to `{target}`"));
                        tag
                    }
                    None => {
                        self.errors.push(TypeError::UnknownIdentifier { name: target.clone() });
                        found
                    }
                }
            }
            Expr::Call { callee, args } => {
                let found: Vec<TypeTag> = args.iter().map(|a| self.check_expr(a, scope)).collect();
                let signature = match self.by_name.get(callee) {
                    Some(&i) => Some((self.functions[i].params.clone(), self.functions[i].ret)),
                    None => self.natives.get(callee).map(|n| (n.params().to_vec(), n.ret())),
                };
                match signature {
                    None => {
                        self.errors.push(TypeError::UnknownFunction { name: callee.clone() });
                        TypeTag::Int
                    }
                    Some((params, ret)) => {
                        if params.len() != found.len() {
                            self.errors.push(TypeError::ArityMismatch {
                                name: callee.clone(),
                                expected: params.len(),
                                found: found.len(),
                            });
                        } else {
                            for (i, (&want, &got)) in params.iter().zip(&found).enumerate() {
                                self.expect(got, want, || format!("argument {} of `{callee}`", i + 1));
                            }
                        }
                        ret
                    }
                }
            }
        };
        self.tags[slot] = tag;
        tag
    }
}

/// For each declared function (in declaration order), whether it lies on a call cycle.
fn find_recursive(program: &Program, by_name: &HashMap<String, usize>) -> Vec<bool> {
    let decls: Vec<&FuncDecl> = program.functions().collect();
    let callees: Vec<Vec<usize>> = decls
        .iter()
        .map(|f| {
            let mut out = Vec::new();
            for stmt in &f.body {
                stmt.for_each_expr(&mut |e| {
                    if let Expr::Call { callee, .. } = e {
                        if let Some(&j) = by_name.get(callee) {
                            out.push(j);
                        }
                    }
                });
            }
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();

    (0..decls.len())
        .map(|start| {
            let mut seen = vec![false; decls.len()];
            let mut stack = callees[start].clone();
            while let Some(f) = stack.pop() {
                if f == start {
                    return true;
                }
                if !std::mem::replace(&mut seen[f], true) {
                    stack.extend(&callees[f]);
                }
            }
            false
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Param;

    fn ret(e: Expr) -> Program {
        Program::new(vec![Stmt::Return(e)])
    }

    #[test]
    fn unknown_identifier() {
        let err = type_check(ret(Expr::ident("x"))).unwrap_err();
        assert_eq!(err.0, vec![TypeError::UnknownIdentifier { name: "x".into() }]);
    }

    #[test]
    fn narrowing_is_rejected() {
        let p = Program::new(vec![Stmt::VarDecl {
            tag: TypeTag::Int,
            name: "a".into(),
            init: Expr::double(1.5),
        }]);
        assert!(matches!(
            type_check(p).unwrap_err().0[0],
            TypeError::TypeMismatch {
                expected: TypeTag::Int,
                found: TypeTag::Double,
                ..
            }
        ));
    }

    #[test]
    fn remainder_requires_ints() {
        let p = ret(Expr::binary(BinOp::Rem, Expr::double(1.0), Expr::int(2)));
        assert!(type_check(p).is_err());
    }

    #[test]
    fn binary_tag_table_is_exhaustive() {
        let lit = |t: TypeTag| match t {
            TypeTag::Int => Expr::int(3),
            TypeTag::Double => Expr::double(3.0),
        };
        for op in BinOp::ALL {
            for l in [TypeTag::Int, TypeTag::Double] {
                for r in [TypeTag::Int, TypeTag::Double] {
                    let result = type_check(ret(Expr::binary(op, lit(l), lit(r))));
                    let any_double = l == TypeTag::Double || r == TypeTag::Double;
                    if op == BinOp::Rem && any_double {
                        assert!(result.is_err());
                        continue;
                    }
                    let typed = result.unwrap();
                    let want = if any_double { TypeTag::Double } else { TypeTag::Int };
                    assert_eq!(typed.tags(), &[want, l, r]);
                    assert_eq!(typed.entry_tag(), want);
                }
            }
        }
    }

    #[test]
    fn call_checks_arity_and_promotes_arguments() {
        let f = Stmt::FuncDecl(FuncDecl {
            ret: TypeTag::Double,
            name: "f".into(),
            params: vec![Param {
                tag: TypeTag::Double,
                name: "a".into(),
            }],
            body: vec![Stmt::Return(Expr::ident("a"))],
        });
        let ok = Program::new(vec![f.clone(), Stmt::Return(Expr::call("f", vec![Expr::int(1)]))]);
        assert_eq!(type_check(ok).unwrap().entry_tag(), TypeTag::Double);

        let bad = Program::new(vec![f, Stmt::Return(Expr::call("f", vec![]))]);
        assert_eq!(
            type_check(bad).unwrap_err().0,
            vec![TypeError::ArityMismatch {
                name: "f".into(),
                expected: 1,
                found: 0
            }]
        );
    }

    #[test]
    fn functions_cannot_see_top_level_variables() {
        let p = Program::new(vec![
            Stmt::VarDecl {
                tag: TypeTag::Int,
                name: "g".into(),
                init: Expr::int(1),
            },
            Stmt::FuncDecl(FuncDecl {
                ret: TypeTag::Int,
                name: "f".into(),
                params: vec![],
                body: vec![Stmt::Return(Expr::ident("g"))],
            }),
        ]);
        assert_eq!(
            type_check(p).unwrap_err().0,
            vec![TypeError::UnknownIdentifier { name: "g".into() }]
        );
    }

    #[test]
    fn duplicates_are_reported() {
        let decl = |n: &str| Stmt::VarDecl {
            tag: TypeTag::Int,
            name: n.into(),
            init: Expr::int(0),
        };
        let p = Program::new(vec![decl("a"), decl("a")]);
        assert_eq!(
            type_check(p).unwrap_err().0,
            vec![TypeError::DuplicateDefinition { name: "a".into() }]
        );
    }

    #[test]
    fn mixed_top_level_returns_disagree() {
        let p = Program::new(vec![Stmt::Return(Expr::int(1)), Stmt::Return(Expr::double(1.0))]);
        assert!(type_check(p).is_err());
    }

    #[test]
    fn recursion_is_detected() {
        let func = |name: &str, calls: &str| {
            Stmt::FuncDecl(FuncDecl {
                ret: TypeTag::Int,
                name: name.into(),
                params: vec![],
                body: vec![Stmt::Return(Expr::call(calls, vec![]))],
            })
        };
        let p = Program::new(vec![func("a", "b"), func("b", "a"), func("c", "a")]);
        let typed = type_check(p).unwrap();
        let flags: Vec<bool> = typed.functions().iter().map(|f| f.recursive).collect();
        assert_eq!(flags, vec![true, true, false]);
    }
}

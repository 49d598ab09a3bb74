//! Direct execution of the AST (the ALG configuration).
//!
//! The tree is evaluated as-is, without any translation step. Variables live
//! in context blocks: each call gets a fresh root block holding its
//! parameters, and lookups walk the chain from the innermost block outward.

use crate::ast::{BinOp, Expr, FuncDecl, Stmt, TypeTag, TypedProgram};
use crate::exec::{coerce_inputs, ExecConfig, ExecError, Executor, NativeRegistry, Value, RECURSION_LIMIT};

/// A scope frame of the tree-walking evaluator.
pub struct ContextBlock<'a, 'p> {
    slots: Vec<(&'a str, TypeTag, Value)>,
    parent: Option<&'p mut (dyn Scope + 'p)>,
}

/// Name resolution through a chain of context blocks.
pub trait Scope {
    fn lookup(&self, name: &str) -> Option<Value>;

    /// Stores into the nearest binding of `name`; returns the stored value.
    fn assign(&mut self, name: &str, value: Value) -> Option<Value>;
}

impl<'a, 'p> ContextBlock<'a, 'p> {
    pub fn root() -> Self {
        ContextBlock {
            slots: Vec::new(),
            parent: None,
        }
    }

    pub fn child(parent: &'p mut (dyn Scope + 'p)) -> Self {
        ContextBlock {
            slots: Vec::new(),
            parent: Some(parent),
        }
    }

    /// Binds `name` in this block, converting `value` to `tag`.
    pub fn bind(&mut self, name: &'a str, tag: TypeTag, value: Value) {
        let value = promote(value, tag);
        self.slots.push((name, tag, value));
    }
}

impl Scope for ContextBlock<'_, '_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        match self.slots.iter().rev().find(|(n, _, _)| *n == name) {
            Some(&(_, _, v)) => Some(v),
            None => self.parent.as_ref().and_then(|p| p.lookup(name)),
        }
    }

    fn assign(&mut self, name: &str, value: Value) -> Option<Value> {
        match self.slots.iter_mut().rev().find(|(n, _, _)| *n == name) {
            Some((_, tag, slot)) => {
                *slot = promote(value, *tag);
                Some(*slot)
            }
            None => self.parent.as_mut().and_then(|p| p.assign(name, value)),
        }
    }
}

fn promote(v: Value, tag: TypeTag) -> Value {
    match (v, tag) {
        (Value::Int(i), TypeTag::Double) => Value::Double(i as f64),
        _ => v,
    }
}

/// Applies a binary operator with the language's runtime rules: wrapping Int
/// arithmetic, Int division and remainder by zero yield 0, mixed operands
/// promote to Double.
pub fn apply_binary(op: BinOp, lhs: Value, rhs: Value) -> Value {
    match (lhs, rhs) {
        (Value::Int(a), Value::Int(b)) => Value::Int(match op {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Div if b == 0 => 0,
            BinOp::Div => a.wrapping_div(b),
            BinOp::Rem if b == 0 => 0,
            BinOp::Rem => a.wrapping_rem(b),
        }),
        _ => {
            let (a, b) = (lhs.as_f64(), rhs.as_f64());
            Value::Double(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                // Rejected by the type checker; kept total for hand-built trees.
                BinOp::Rem => a % b,
            })
        }
    }
}

pub fn apply_neg(v: Value) -> Value {
    match v {
        Value::Int(i) => Value::Int(i.wrapping_neg()),
        Value::Double(d) => Value::Double(-d),
    }
}

/// Tree-walking executor over a type-checked program.
pub struct DirectExecutor<'a> {
    program: &'a TypedProgram,
    registry: NativeRegistry,
    depth: u64,
}

enum Flow {
    Next,
    Return(Value),
}

const STACK_RED_ZONE: usize = 64 * 1024;
const STACK_GROWTH: usize = 1024 * 1024;

impl<'a> DirectExecutor<'a> {
    pub fn new(program: &'a TypedProgram, registry: &NativeRegistry) -> Self {
        DirectExecutor {
            program,
            registry: registry.clone(),
            depth: 0,
        }
    }

    fn exec_block(
        &mut self,
        stmts: impl Iterator<Item = &'a Stmt>,
        ctx: &mut ContextBlock<'a, '_>,
    ) -> Result<Flow, ExecError> {
        for stmt in stmts {
            match stmt {
                Stmt::ExprStmt(e) => {
                    self.eval(e, ctx)?;
                }
                Stmt::VarDecl { tag, name, init } => {
                    let v = self.eval(init, ctx)?;
                    ctx.bind(name, *tag, v);
                }
                Stmt::Return(e) => return Ok(Flow::Return(self.eval(e, ctx)?)),
                Stmt::FuncDecl(_) => {}
            }
        }
        Ok(Flow::Next)
    }

    fn call(&mut self, index: usize, args: Vec<Value>) -> Result<Value, ExecError> {
        let info = &self.program.functions()[index];
        let counted = info.recursive;
        if counted {
            if self.depth >= RECURSION_LIMIT {
                return Err(ExecError::RecursionLimit);
            }
            self.depth += 1;
        }
        let decl: &'a FuncDecl = self.program.decl(index);
        let result = stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || {
            let mut frame = ContextBlock::root();
            for (p, v) in decl.params.iter().zip(args) {
                frame.bind(&p.name, p.tag, v);
            }
            match self.exec_block(decl.body.iter(), &mut frame)? {
                Flow::Return(v) => Ok(promote(v, decl.ret)),
                Flow::Next => Ok(Value::zero(decl.ret)),
            }
        });
        if counted {
            self.depth -= 1;
        }
        result
    }

    fn eval(&mut self, e: &'a Expr, ctx: &mut ContextBlock<'a, '_>) -> Result<Value, ExecError> {
        Ok(match e {
            Expr::IntLiteral(v) => Value::Int(*v),
            Expr::DoubleLiteral(v) => Value::Double(*v),
            Expr::Identifier(name) => ctx.lookup(name).expect("type checker resolved every identifier"),
            Expr::BinaryOp { op, lhs, rhs } => {
                let a = self.eval(lhs, ctx)?;
                let b = self.eval(rhs, ctx)?;
                apply_binary(*op, a, b)
            }
            Expr::UnaryNeg(operand) => apply_neg(self.eval(operand, ctx)?),
            Expr::Assignment { target, value } => {
                let v = self.eval(value, ctx)?;
                ctx.assign(target, v)
                    .expect("type checker resolved every assignment target")
            }
            Expr::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, ctx)?);
                }
                if let Some(index) = self.program.function_index(callee) {
                    let decl = self.program.decl(index);
                    for (v, p) in values.iter_mut().zip(&decl.params) {
                        *v = promote(*v, p.tag);
                    }
                    self.call(index, values)?
                } else {
                    let native = self
                        .registry
                        .get(callee)
                        .ok_or_else(|| ExecError::UnresolvedSymbol(callee.clone()))?;
                    for (v, &t) in values.iter_mut().zip(native.params()) {
                        *v = promote(*v, t);
                    }
                    native.invoke(&values)
                }
            }
        })
    }
}

impl Executor for DirectExecutor<'_> {
    fn config(&self) -> ExecConfig {
        ExecConfig::Alg
    }

    fn run(&mut self, inputs: &[Value]) -> Result<Value, ExecError> {
        self.depth = 0;
        let program = self.program;
        if let Some(info) = program.gp_main() {
            let args = coerce_inputs(&info.params, inputs)?;
            let index = program.function_index(&info.name).expect("gp_main is declared");
            return self.call(index, args);
        }
        if !inputs.is_empty() {
            return Err(ExecError::InputArity {
                expected: 0,
                found: inputs.len(),
            });
        }
        let mut root = ContextBlock::root();
        match self.exec_block(program.program().entry_statements(), &mut root)? {
            Flow::Return(v) => Ok(v),
            Flow::Next => Ok(Value::Int(0)),
        }
    }
}

//! AST → IR lowering, one rule per node kind.
//!
//! Variables live in stack slots: reads are loads, writes are stores. No
//! simplification happens here, so the unoptimized dump mirrors the tree.

use std::collections::HashMap;

use super::{
    verify_module, BinaryOp, BlockId, Callee, ExternDecl, Function, InstKind, Module, Operand, SlotId, Terminator, Type,
};
use crate::ast::{BinOp, Expr, FuncDecl, Stmt, TypeTag, TypedProgram};
use crate::exec::{ExecError, NativeRegistry};

/// Name of the implicit function holding the top-level statements.
pub const ENTRY_NAME: &str = "__entry";

pub(crate) fn ir_type(tag: TypeTag) -> Type {
    match tag {
        TypeTag::Int => Type::I64,
        TypeTag::Double => Type::F64,
    }
}

pub(crate) fn tag_of(ty: Type) -> TypeTag {
    match ty {
        Type::F64 => TypeTag::Double,
        Type::I64 | Type::I1 => TypeTag::Int,
    }
}

/// Lowers a type-checked program to a verified module.
pub fn codegen_program(program: &TypedProgram, registry: &NativeRegistry) -> Result<Module, ExecError> {
    let mut module = Module::default();
    let mut externs: HashMap<String, u32> = HashMap::new();
    let func_index: HashMap<&str, u32> = program
        .functions()
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i as u32))
        .collect();

    // Signatures first so calls can be typed before bodies exist.
    for (i, info) in program.functions().iter().enumerate() {
        let decl = program.decl(i);
        let params: Vec<(String, Type)> = decl.params.iter().map(|p| (p.name.clone(), ir_type(p.tag))).collect();
        module
            .functions
            .push(Function::new(info.name.clone(), &params, ir_type(info.ret)));
    }
    let entry_ret = ir_type(program.entry_tag());
    module.functions.push(Function::new(ENTRY_NAME, &[], entry_ret));

    let signatures: Vec<(Vec<TypeTag>, TypeTag)> =
        program.functions().iter().map(|f| (f.params.clone(), f.ret)).collect();

    let tags = program.tags();
    for (i, info) in program.functions().iter().enumerate() {
        let decl: &FuncDecl = program.decl(i);
        let mut g = FnGen::new(
            std::mem::replace(&mut module.functions[i], Function::new("", &[], Type::I64)),
            tags,
            program.tag_offset(info.stmt_index),
            info.ret,
            info.recursive,
        );
        let ctx = Ctx {
            func_index: &func_index,
            signatures: &signatures,
            registry,
        };
        g.prologue(&decl.params.iter().map(|p| p.name.as_str()).collect::<Vec<_>>());
        for stmt in &decl.body {
            g.stmt(stmt, &ctx, &mut module.externs, &mut externs)?;
        }
        module.functions[i] = g.finish();
    }

    let entry_index = module.functions.len() - 1;
    let mut g = FnGen::new(
        std::mem::replace(&mut module.functions[entry_index], Function::new("", &[], Type::I64)),
        tags,
        0,
        program.entry_tag(),
        false,
    );
    g.prologue(&[]);
    let ctx = Ctx {
        func_index: &func_index,
        signatures: &signatures,
        registry,
    };
    for (si, stmt) in program.program().statements.iter().enumerate() {
        if matches!(stmt, Stmt::FuncDecl(_)) {
            continue;
        }
        g.pos = program.tag_offset(si);
        g.stmt(stmt, &ctx, &mut module.externs, &mut externs)?;
    }
    module.functions[entry_index] = g.finish();

    verify_module(&module)?;
    Ok(module)
}

struct Ctx<'a> {
    func_index: &'a HashMap<&'a str, u32>,
    signatures: &'a [(Vec<TypeTag>, TypeTag)],
    registry: &'a NativeRegistry,
}

struct FnGen<'t> {
    f: Function,
    vars: HashMap<String, (SlotId, TypeTag)>,
    cur: BlockId,
    tags: &'t [TypeTag],
    pos: usize,
    ret: TypeTag,
    recursive: bool,
    /// Set once a `return` has been emitted; later statements are dead.
    done: bool,
}

impl<'t> FnGen<'t> {
    fn new(f: Function, tags: &'t [TypeTag], pos: usize, ret: TypeTag, recursive: bool) -> Self {
        FnGen {
            f,
            vars: HashMap::new(),
            cur: BlockId(0),
            tags,
            pos,
            ret,
            recursive,
            done: false,
        }
    }

    fn prologue(&mut self, param_names: &[&str]) {
        let entry = self.f.add_block("entry");
        self.cur = entry;
        for (i, name) in param_names.iter().enumerate() {
            let v = self.f.params[i];
            let ty = self.f.value_type(v);
            let slot = self.f.add_slot(*name, ty);
            self.vars.insert(name.to_string(), (slot, tag_of(ty)));
            self.emit(InstKind::Store {
                slot,
                value: Operand::Value(v),
            });
        }
        if self.recursive {
            let overflow = self.emit(InstKind::DepthEnter).expect("depth.enter yields a flag");
            let body = self.f.add_block("body");
            let trap = self.f.add_block("overflow");
            self.f.block_mut(trap).term = Terminator::Unwind;
            self.f.block_mut(entry).term = Terminator::CondBr {
                cond: Operand::Value(overflow),
                then_dest: trap,
                else_dest: body,
            };
            self.cur = body;
        }
    }

    fn finish(mut self) -> Function {
        if !self.done {
            let zero = match self.ret {
                TypeTag::Int => Operand::Int(0),
                TypeTag::Double => Operand::float(0.0),
            };
            self.ret_with(zero);
        }
        self.f
    }

    fn ret_with(&mut self, value: Operand) {
        if self.recursive {
            self.emit(InstKind::DepthLeave);
        }
        self.f.block_mut(self.cur).term = Terminator::Ret(value);
        self.done = true;
    }

    fn emit(&mut self, kind: InstKind) -> Option<super::ValueId> {
        let ty = match &kind {
            InstKind::Binary { op, .. } => Some(op.operand_type()),
            InstKind::FNeg(_) | InstKind::SIToFP(_) => Some(Type::F64),
            InstKind::ICmpEq(..) | InstKind::DepthEnter => Some(Type::I1),
            InstKind::Select { if_true, .. } => Some(self.f.operand_type(*if_true)),
            InstKind::Load(slot) => Some(self.f.slots[slot.index()].ty),
            InstKind::Store { .. } | InstKind::DepthLeave => None,
            InstKind::Call { .. } => unreachable!("calls are pushed with an explicit result type"),
        };
        self.f.push(self.cur, kind, ty)
    }

    fn value(&mut self, kind: InstKind) -> Operand {
        Operand::Value(self.emit(kind).expect("instruction yields a value"))
    }

    fn next_tag(&mut self) -> TypeTag {
        let t = self.tags[self.pos];
        self.pos += 1;
        t
    }

    fn convert(&mut self, op: Operand, from: TypeTag, to: TypeTag) -> Operand {
        match (from, to) {
            (TypeTag::Int, TypeTag::Double) => self.value(InstKind::SIToFP(op)),
            _ => op,
        }
    }

    fn stmt(
        &mut self,
        stmt: &Stmt,
        ctx: &Ctx<'_>,
        decls: &mut Vec<ExternDecl>,
        externs: &mut HashMap<String, u32>,
    ) -> Result<(), ExecError> {
        if self.done {
            // Unreachable statement; keep the tag cursor aligned.
            stmt.for_each_expr(&mut |_| self.pos += 1);
            return Ok(());
        }
        match stmt {
            Stmt::ExprStmt(e) => {
                self.expr(e, ctx, decls, externs)?;
            }
            Stmt::VarDecl { tag, name, init } => {
                let (v, t) = self.expr(init, ctx, decls, externs)?;
                let v = self.convert(v, t, *tag);
                let slot = self.f.add_slot(name.clone(), ir_type(*tag));
                self.vars.insert(name.clone(), (slot, *tag));
                self.emit(InstKind::Store { slot, value: v });
            }
            Stmt::Return(e) => {
                let (v, t) = self.expr(e, ctx, decls, externs)?;
                let v = self.convert(v, t, self.ret);
                self.ret_with(v);
            }
            Stmt::FuncDecl(f) => {
                return Err(ExecError::Codegen(format!("nested function `{}`", f.name)));
            }
        }
        Ok(())
    }

    fn expr(
        &mut self,
        e: &Expr,
        ctx: &Ctx<'_>,
        decls: &mut Vec<ExternDecl>,
        externs: &mut HashMap<String, u32>,
    ) -> Result<(Operand, TypeTag), ExecError> {
        let tag = self.next_tag();
        let op = match e {
            Expr::IntLiteral(v) => Operand::Int(*v),
            Expr::DoubleLiteral(v) => Operand::float(*v),
            Expr::Identifier(name) => {
                let (slot, _) = self.var(name)?;
                self.value(InstKind::Load(slot))
            }
            Expr::Assignment { target, value } => {
                let (v, t) = self.expr(value, ctx, decls, externs)?;
                let (slot, var_tag) = self.var(target)?;
                let v = self.convert(v, t, var_tag);
                self.emit(InstKind::Store { slot, value: v });
                v
            }
            Expr::UnaryNeg(operand) => {
                let (v, _) = self.expr(operand, ctx, decls, externs)?;
                match tag {
                    TypeTag::Int => self.value(InstKind::Binary {
                        op: BinaryOp::Sub,
                        lhs: Operand::Int(0),
                        rhs: v,
                    }),
                    TypeTag::Double => self.value(InstKind::FNeg(v)),
                }
            }
            Expr::BinaryOp { op, lhs, rhs } => {
                let (a, ta) = self.expr(lhs, ctx, decls, externs)?;
                let (b, tb) = self.expr(rhs, ctx, decls, externs)?;
                match tag {
                    TypeTag::Int => self.int_binary(*op, a, b),
                    TypeTag::Double => {
                        let a = self.convert(a, ta, TypeTag::Double);
                        let b = self.convert(b, tb, TypeTag::Double);
                        let op = match op {
                            BinOp::Add => BinaryOp::FAdd,
                            BinOp::Sub => BinaryOp::FSub,
                            BinOp::Mul => BinaryOp::FMul,
                            BinOp::Div => BinaryOp::FDiv,
                            BinOp::Rem => {
                                return Err(ExecError::Codegen("`%` on double operands".into()));
                            }
                        };
                        self.value(InstKind::Binary { op, lhs: a, rhs: b })
                    }
                }
            }
            Expr::Call { callee, args } => {
                let mut lowered = Vec::with_capacity(args.len());
                for a in args {
                    lowered.push(self.expr(a, ctx, decls, externs)?);
                }
                let (target, params) = if let Some(&i) = ctx.func_index.get(callee.as_str()) {
                    (Callee::Func(i), ctx.signatures[i as usize].0.clone())
                } else {
                    let (params, ret) = match ctx.registry.get(callee) {
                        Some(n) => (n.params().to_vec(), n.ret()),
                        // Signature inferred from the call site; resolution fails later.
                        None => (lowered.iter().map(|(_, t)| *t).collect(), tag),
                    };
                    let index = match externs.get(callee) {
                        Some(&i) => i,
                        None => {
                            let i = decls.len() as u32;
                            decls.push(ExternDecl {
                                name: callee.clone(),
                                params: params.iter().map(|&t| ir_type(t)).collect(),
                                ret: ir_type(ret),
                            });
                            externs.insert(callee.clone(), i);
                            i
                        }
                    };
                    (Callee::Extern(index), params)
                };
                if params.len() != lowered.len() {
                    return Err(ExecError::Codegen(format!("arity mismatch calling `{callee}`")));
                }
                let args: Vec<Operand> = lowered
                    .into_iter()
                    .zip(&params)
                    .map(|((v, t), &p)| self.convert(v, t, p))
                    .collect();
                let ret = ir_type(tag);
                let v = self
                    .f
                    .push(self.cur, InstKind::Call { callee: target, args }, Some(ret));
                Operand::Value(v.expect("call yields a value"))
            }
        };
        Ok((op, tag))
    }

    fn var(&self, name: &str) -> Result<(SlotId, TypeTag), ExecError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| ExecError::Codegen(format!("unknown variable `{name}`")))
    }

    /// Integer arithmetic; `/` and `%` are guarded against a zero divisor and
    /// the overflowing `MIN / -1` pair.
    fn int_binary(&mut self, op: BinOp, a: Operand, b: Operand) -> Operand {
        let simple = |op| InstKind::Binary { op, lhs: a, rhs: b };
        match op {
            BinOp::Add => self.value(simple(BinaryOp::Add)),
            BinOp::Sub => self.value(simple(BinaryOp::Sub)),
            BinOp::Mul => self.value(simple(BinaryOp::Mul)),
            BinOp::Div | BinOp::Rem => {
                let is_zero = self.value(InstKind::ICmpEq(b, Operand::Int(0)));
                let is_minus_one = self.value(InstKind::ICmpEq(b, Operand::Int(-1)));
                let nonzero = self.value(InstKind::Select {
                    cond: is_zero,
                    if_true: Operand::Int(1),
                    if_false: b,
                });
                let safe = self.value(InstKind::Select {
                    cond: is_minus_one,
                    if_true: Operand::Int(1),
                    if_false: nonzero,
                });
                if op == BinOp::Rem {
                    // x % 1 == 0, which is also the answer for both guarded divisors.
                    return self.value(InstKind::Binary {
                        op: BinaryOp::SRem,
                        lhs: a,
                        rhs: safe,
                    });
                }
                let quotient = self.value(InstKind::Binary {
                    op: BinaryOp::SDiv,
                    lhs: a,
                    rhs: safe,
                });
                let negated = self.value(InstKind::Binary {
                    op: BinaryOp::Sub,
                    lhs: Operand::Int(0),
                    rhs: a,
                });
                let by_minus_one = self.value(InstKind::Select {
                    cond: is_minus_one,
                    if_true: negated,
                    if_false: quotient,
                });
                self.value(InstKind::Select {
                    cond: is_zero,
                    if_true: Operand::Int(0),
                    if_false: by_minus_one,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::type_check;
    use crate::frontend::{parse_source, SAMPLE_PROGRAM};

    fn lower(src: &str) -> Module {
        let typed = type_check(parse_source(src).unwrap()).unwrap();
        codegen_program(&typed, &NativeRegistry::new()).unwrap()
    }

    #[test]
    fn return_constant() {
        let dump = lower("return 42").dump();
        assert!(dump.contains("ret i64 42"), "{dump}");
    }

    #[test]
    fn sample_program_has_two_functions() {
        let m = lower(SAMPLE_PROGRAM);
        let dump = m.dump();
        assert_eq!(dump.matches("define ").count(), 2);
        assert!(dump.contains("@compute("));
        assert!(dump.contains("@__entry("));
    }

    #[test]
    fn protected_division_is_guarded() {
        let dump = lower("return 7/0").dump();
        assert!(dump.contains("icmp eq i64 0, 0"), "{dump}");
        assert!(dump.contains("select"), "{dump}");
    }

    #[test]
    fn empty_program_has_only_entry() {
        let m = lower("");
        assert_eq!(m.functions.len(), 1);
        assert_eq!(m.functions[0].name, ENTRY_NAME);
        assert!(m.dump().contains("ret i64 0"));
    }

    #[test]
    fn promotion_inserts_conversion() {
        let dump = lower("double x = 3\nreturn x + 1").dump();
        assert_eq!(dump.matches("sitofp").count(), 2, "{dump}");
        assert!(dump.contains("fadd"));
    }

    #[test]
    fn dead_statements_are_skipped() {
        let m = lower("return 1\nint y = 2 + 3\nreturn y");
        assert!(!m.dump().contains("add"));
    }

    #[test]
    fn recursion_guard_only_on_cycles() {
        let src = "int f(int n) { return f(n) }\nint g(int n) { return n }\nreturn g(1)";
        let m = lower(src);
        let dump = m.dump();
        assert_eq!(dump.matches("depth.enter").count(), 1, "{dump}");
        assert!(dump.contains("unwind"));
    }

    #[test]
    fn deterministic() {
        let typed = type_check(parse_source(SAMPLE_PROGRAM).unwrap()).unwrap();
        let a = codegen_program(&typed, &NativeRegistry::new()).unwrap().dump();
        let b = codegen_program(&typed, &NativeRegistry::new()).unwrap().dump();
        assert_eq!(a, b);
    }
}

//! SSA intermediate representation and the translation pipeline built on it:
//! AST → IR ([`codegen_program`]), optional optimization passes
//! ([`optimize`]), then execution by the IR interpreter or by the JIT
//! ([`make_engine`]).
//!
//! The IR is deliberately close to an assembly language: every function owns
//! typed stack slots (one per variable), straight-line instructions grouped
//! into basic blocks, and an explicit terminator per block. Values are defined
//! exactly once. Constants appear directly as instruction operands.

mod cfg;
mod codegen;
mod engine;
mod interp;
mod jit;
pub mod passes;
mod print;
mod verify;

use std::fmt;

pub use cfg::Cfg;
pub use codegen::{codegen_program, ENTRY_NAME};
pub use engine::{make_engine, EngineKind, ExecEngine};
pub use passes::{optimize, Pass, PassSelection};
pub use verify::{verify_module, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    /// Boolean produced by comparisons and consumed by `select`/`br`.
    I1,
    I64,
    F64,
}

impl Type {
    pub fn name(self) -> &'static str {
        match self {
            Type::I1 => "i1",
            Type::I64 => "i64",
            Type::F64 => "double",
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! entity {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

entity!(ValueId);
entity!(InstId);
entity!(BlockId);
entity!(SlotId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    Value(ValueId),
    Int(i64),
    /// A binary64 constant, stored as its bit pattern.
    Float(u64),
    Bool(bool),
}

impl Operand {
    pub fn float(v: f64) -> Operand {
        Operand::Float(v.to_bits())
    }

    pub fn is_const(self) -> bool {
        !matches!(self, Operand::Value(_))
    }

    pub fn as_value(self) -> Option<ValueId> {
        match self {
            Operand::Value(v) => Some(v),
            _ => None,
        }
    }

    /// Raw bits of a constant operand.
    pub fn const_bits(self) -> Option<u64> {
        match self {
            Operand::Value(_) => None,
            Operand::Int(i) => Some(i as u64),
            Operand::Float(b) => Some(b),
            Operand::Bool(b) => Some(b as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    /// Signed division. The divisor must be non-zero and the pair must not
    /// be `(i64::MIN, -1)`; code generation guards both cases.
    SDiv,
    SRem,
    FAdd,
    FSub,
    FMul,
    FDiv,
}

impl BinaryOp {
    pub fn mnemonic(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::SDiv => "sdiv",
            BinaryOp::SRem => "srem",
            BinaryOp::FAdd => "fadd",
            BinaryOp::FSub => "fsub",
            BinaryOp::FMul => "fmul",
            BinaryOp::FDiv => "fdiv",
        }
    }

    pub fn operand_type(self) -> Type {
        match self {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::SDiv | BinaryOp::SRem => Type::I64,
            _ => Type::F64,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Mul | BinaryOp::FAdd | BinaryOp::FMul)
    }

    /// Evaluates on raw bits. Division by zero yields 0 and the overflowing
    /// `MIN / -1` wraps, so evaluation is total.
    pub fn eval(self, a: u64, b: u64) -> u64 {
        let (ia, ib) = (a as i64, b as i64);
        let (fa, fb) = (f64::from_bits(a), f64::from_bits(b));
        match self {
            BinaryOp::Add => ia.wrapping_add(ib) as u64,
            BinaryOp::Sub => ia.wrapping_sub(ib) as u64,
            BinaryOp::Mul => ia.wrapping_mul(ib) as u64,
            BinaryOp::SDiv => ia
                .checked_div(ib)
                .unwrap_or(if ib == 0 { 0 } else { ia.wrapping_neg() }) as u64,
            BinaryOp::SRem => ia.checked_rem(ib).unwrap_or(0) as u64,
            BinaryOp::FAdd => (fa + fb).to_bits(),
            BinaryOp::FSub => (fa - fb).to_bits(),
            BinaryOp::FMul => (fa * fb).to_bits(),
            BinaryOp::FDiv => (fa / fb).to_bits(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Callee {
    /// Index into [`Module::functions`].
    Func(u32),
    /// Index into [`Module::externs`].
    Extern(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstKind {
    Binary {
        op: BinaryOp,
        lhs: Operand,
        rhs: Operand,
    },
    FNeg(Operand),
    /// Integer equality, producing `i1`.
    ICmpEq(Operand, Operand),
    Select {
        cond: Operand,
        if_true: Operand,
        if_false: Operand,
    },
    /// Signed integer to binary64 conversion.
    SIToFP(Operand),
    Load(SlotId),
    Store {
        slot: SlotId,
        value: Operand,
    },
    Call {
        callee: Callee,
        args: Vec<Operand>,
    },
    /// Increments the recursion depth counter; yields `true` when the limit is exceeded.
    DepthEnter,
    DepthLeave,
}

impl InstKind {
    /// True for instructions that can be removed when their result is unused.
    pub fn is_pure(&self) -> bool {
        matches!(
            self,
            InstKind::Binary { .. }
                | InstKind::FNeg(_)
                | InstKind::ICmpEq(..)
                | InstKind::Select { .. }
                | InstKind::SIToFP(_)
                | InstKind::Load(_)
        )
    }

    pub fn operands(&self) -> Vec<Operand> {
        match self {
            InstKind::Binary { lhs, rhs, .. } => vec![*lhs, *rhs],
            InstKind::FNeg(a) | InstKind::SIToFP(a) => vec![*a],
            InstKind::ICmpEq(a, b) => vec![*a, *b],
            InstKind::Select {
                cond,
                if_true,
                if_false,
            } => vec![*cond, *if_true, *if_false],
            InstKind::Store { value, .. } => vec![*value],
            InstKind::Call { args, .. } => args.clone(),
            InstKind::Load(_) | InstKind::DepthEnter | InstKind::DepthLeave => vec![],
        }
    }

    pub fn operands_mut(&mut self) -> Vec<&mut Operand> {
        match self {
            InstKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            InstKind::FNeg(a) | InstKind::SIToFP(a) => vec![a],
            InstKind::ICmpEq(a, b) => vec![a, b],
            InstKind::Select {
                cond,
                if_true,
                if_false,
            } => vec![cond, if_true, if_false],
            InstKind::Store { value, .. } => vec![value],
            InstKind::Call { args, .. } => args.iter_mut().collect(),
            InstKind::Load(_) | InstKind::DepthEnter | InstKind::DepthLeave => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inst {
    pub kind: InstKind,
    pub result: Option<ValueId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    Ret(Operand),
    Br(BlockId),
    CondBr {
        cond: Operand,
        then_dest: BlockId,
        else_dest: BlockId,
    },
    /// Aborts the whole run with a recursion-limit error.
    Unwind,
}

impl Terminator {
    pub fn successors(&self) -> Vec<BlockId> {
        match self {
            Terminator::Br(b) => vec![*b],
            Terminator::CondBr {
                then_dest, else_dest, ..
            } => vec![*then_dest, *else_dest],
            Terminator::Ret(_) | Terminator::Unwind => vec![],
        }
    }

    pub fn operands_mut(&mut self) -> Vec<&mut Operand> {
        match self {
            Terminator::Ret(v) => vec![v],
            Terminator::CondBr { cond, .. } => vec![cond],
            Terminator::Br(_) | Terminator::Unwind => vec![],
        }
    }

    pub fn operands(&self) -> Vec<Operand> {
        match self {
            Terminator::Ret(v) => vec![*v],
            Terminator::CondBr { cond, .. } => vec![*cond],
            Terminator::Br(_) | Terminator::Unwind => vec![],
        }
    }

    pub fn retarget(&mut self, from: BlockId, to: BlockId) {
        match self {
            Terminator::Br(b) if *b == from => *b = to,
            Terminator::CondBr {
                then_dest, else_dest, ..
            } => {
                if *then_dest == from {
                    *then_dest = to;
                }
                if *else_dest == from {
                    *else_dest = to;
                }
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: String,
    pub insts: Vec<InstId>,
    pub term: Terminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<ValueId>,
    pub ret: Type,
    pub slots: Vec<Slot>,
    /// Block storage; only blocks listed in `layout` are part of the function.
    pub blocks: Vec<Block>,
    /// Block order, entry first.
    pub layout: Vec<BlockId>,
    /// Instruction storage; only instructions listed in a block are live.
    pub insts: Vec<Inst>,
    pub value_types: Vec<Type>,
    /// Source-level names for parameters, used when printing.
    pub value_names: Vec<Option<String>>,
}

impl Function {
    pub fn new(name: impl Into<String>, params: &[(String, Type)], ret: Type) -> Self {
        let mut f = Function {
            name: name.into(),
            params: Vec::new(),
            ret,
            slots: Vec::new(),
            blocks: Vec::new(),
            layout: Vec::new(),
            insts: Vec::new(),
            value_types: Vec::new(),
            value_names: Vec::new(),
        };
        for (pname, ty) in params {
            let v = f.new_value(*ty);
            f.value_names[v.index()] = Some(pname.clone());
            f.params.push(v);
        }
        f
    }

    pub fn param_types(&self) -> Vec<Type> {
        self.params.iter().map(|&v| self.value_type(v)).collect()
    }

    pub fn entry(&self) -> BlockId {
        self.layout[0]
    }

    pub fn new_value(&mut self, ty: Type) -> ValueId {
        let v = ValueId(self.value_types.len() as u32);
        self.value_types.push(ty);
        self.value_names.push(None);
        v
    }

    pub fn value_type(&self, v: ValueId) -> Type {
        self.value_types[v.index()]
    }

    pub fn operand_type(&self, op: Operand) -> Type {
        match op {
            Operand::Value(v) => self.value_type(v),
            Operand::Int(_) => Type::I64,
            Operand::Float(_) => Type::F64,
            Operand::Bool(_) => Type::I1,
        }
    }

    pub fn add_slot(&mut self, name: impl Into<String>, ty: Type) -> SlotId {
        let id = SlotId(self.slots.len() as u32);
        self.slots.push(Slot { name: name.into(), ty });
        id
    }

    /// Appends a new block to the layout. Its terminator must be set before use.
    pub fn add_block(&mut self, label: impl Into<String>) -> BlockId {
        let id = BlockId(self.blocks.len() as u32);
        self.blocks.push(Block {
            label: label.into(),
            insts: Vec::new(),
            term: Terminator::Unwind,
        });
        self.layout.push(id);
        id
    }

    pub fn block(&self, b: BlockId) -> &Block {
        &self.blocks[b.index()]
    }

    pub fn block_mut(&mut self, b: BlockId) -> &mut Block {
        &mut self.blocks[b.index()]
    }

    pub fn inst(&self, i: InstId) -> &Inst {
        &self.insts[i.index()]
    }

    /// Creates an instruction (not yet placed in any block).
    pub fn create_inst(&mut self, kind: InstKind, result_ty: Option<Type>) -> InstId {
        let result = result_ty.map(|t| self.new_value(t));
        let id = InstId(self.insts.len() as u32);
        self.insts.push(Inst { kind, result });
        id
    }

    /// Appends an instruction to `block` and returns its result (if any).
    pub fn push(&mut self, block: BlockId, kind: InstKind, result_ty: Option<Type>) -> Option<ValueId> {
        let id = self.create_inst(kind, result_ty);
        self.blocks[block.index()].insts.push(id);
        self.insts[id.index()].result
    }

    /// Result type of `kind`, computed from its operands.
    pub fn result_type(&self, kind: &InstKind, module: &Module) -> Option<Type> {
        match kind {
            InstKind::Binary { op, .. } => Some(op.operand_type()),
            InstKind::FNeg(_) | InstKind::SIToFP(_) => Some(Type::F64),
            InstKind::ICmpEq(..) | InstKind::DepthEnter => Some(Type::I1),
            InstKind::Select { if_true, .. } => Some(self.operand_type(*if_true)),
            InstKind::Load(slot) => Some(self.slots[slot.index()].ty),
            InstKind::Call { callee, .. } => Some(module.callee_signature(*callee).1),
            InstKind::Store { .. } | InstKind::DepthLeave => None,
        }
    }

    /// Live instructions in layout order, with their blocks.
    pub fn live_insts(&self) -> impl Iterator<Item = (BlockId, InstId)> + '_ {
        self.layout
            .iter()
            .flat_map(move |&b| self.blocks[b.index()].insts.iter().map(move |&i| (b, i)))
    }

    /// Number of live instructions, terminators excluded.
    pub fn inst_count(&self) -> usize {
        self.layout.iter().map(|b| self.blocks[b.index()].insts.len()).sum()
    }

    /// Rewrites every operand of every live instruction and terminator.
    pub fn map_operands(&mut self, mut f: impl FnMut(Operand) -> Operand) {
        for &b in &self.layout {
            let block = &mut self.blocks[b.index()];
            for &i in &block.insts {
                for op in self.insts[i.index()].kind.operands_mut() {
                    *op = f(*op);
                }
            }
            for op in block.term.operands_mut() {
                *op = f(*op);
            }
        }
    }

    /// Use counts of every value, over live instructions and terminators.
    pub fn use_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.value_types.len()];
        for &b in &self.layout {
            let block = &self.blocks[b.index()];
            let term_ops = block.term.operands();
            let ops = block
                .insts
                .iter()
                .flat_map(|&i| self.insts[i.index()].kind.operands())
                .chain(term_ops);
            for op in ops {
                if let Operand::Value(v) = op {
                    counts[v.index()] += 1;
                }
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternDecl {
    pub name: String,
    pub params: Vec<Type>,
    pub ret: Type,
}

/// One compilation unit: one function per declared function, the implicit
/// entry, and extern declarations for every native it calls.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Module {
    pub functions: Vec<Function>,
    pub externs: Vec<ExternDecl>,
}

impl Module {
    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn callee_signature(&self, callee: Callee) -> (Vec<Type>, Type) {
        match callee {
            Callee::Func(i) => {
                let f = &self.functions[i as usize];
                (f.param_types(), f.ret)
            }
            Callee::Extern(i) => {
                let e = &self.externs[i as usize];
                (e.params.clone(), e.ret)
            }
        }
    }

    pub fn callee_name(&self, callee: Callee) -> &str {
        match callee {
            Callee::Func(i) => &self.functions[i as usize].name,
            Callee::Extern(i) => &self.externs[i as usize].name,
        }
    }

    /// Human-readable IR text.
    pub fn dump(&self) -> String {
        print::print_module(self)
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Identifies the JIT code generator and host target.
pub fn backend_description() -> String {
    jit::describe_host()
}

/// Human-readable IR text of `module`; deterministic.
pub fn dump_ir(module: &Module) -> String {
    module.dump()
}

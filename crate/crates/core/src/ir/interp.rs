//! IR interpreter.
//!
//! Functions are flattened into per-block instruction vectors once, at engine
//! construction. Execution keeps an explicit frame stack over one shared
//! register file of raw 64-bit patterns, so deep recursion never touches the
//! host stack.

use std::sync::Arc;

use super::{Callee, InstKind, Module, Operand, Terminator};
use crate::ast::TypeTag;
use crate::exec::{ExecError, NativeEntry, Value, RECURSION_LIMIT};
use crate::ir::codegen::tag_of;

const NO_RESULT: u32 = u32::MAX;

struct Op {
    kind: InstKind,
    result: u32,
}

struct Block {
    ops: Vec<Op>,
    term: Terminator,
}

struct Func {
    /// Register count (one per SSA value).
    regs: usize,
    slots: usize,
    params: Vec<u32>,
    /// Indexed by block id; blocks outside the layout stay empty.
    blocks: Vec<Block>,
    entry: usize,
}

struct Frame {
    func: usize,
    block: usize,
    pc: usize,
    base: usize,
    slot_base: usize,
    /// Register in the caller's frame receiving the return value.
    ret_dest: u32,
}

pub(super) struct Interpreter {
    code: Code,
    state: State,
}

struct Code {
    funcs: Vec<Func>,
    natives: Vec<Arc<NativeEntry>>,
    extern_params: Vec<Vec<TypeTag>>,
}

#[derive(Default)]
struct State {
    regs: Vec<u64>,
    slots: Vec<u64>,
    frames: Vec<Frame>,
}

impl Interpreter {
    pub(super) fn new(module: Module, natives: Vec<Arc<NativeEntry>>) -> Self {
        let extern_params = module
            .externs
            .iter()
            .map(|e| e.params.iter().map(|&t| tag_of(t)).collect())
            .collect();
        let funcs = module
            .functions
            .into_iter()
            .map(|f| {
                let mut blocks: Vec<Block> = (0..f.blocks.len())
                    .map(|_| Block {
                        ops: Vec::new(),
                        term: Terminator::Unwind,
                    })
                    .collect();
                for &b in &f.layout {
                    let src = &f.blocks[b.index()];
                    blocks[b.index()] = Block {
                        ops: src
                            .insts
                            .iter()
                            .map(|&i| {
                                let inst = &f.insts[i.index()];
                                Op {
                                    kind: inst.kind.clone(),
                                    result: inst.result.map_or(NO_RESULT, |v| v.0),
                                }
                            })
                            .collect(),
                        term: src.term.clone(),
                    };
                }
                Func {
                    regs: f.value_types.len(),
                    slots: f.slots.len(),
                    params: f.params.iter().map(|v| v.0).collect(),
                    blocks,
                    entry: f.layout[0].index(),
                }
            })
            .collect();
        Interpreter {
            code: Code {
                funcs,
                natives,
                extern_params,
            },
            state: State::default(),
        }
    }

    /// Calls function `index` with raw argument bits and returns raw result bits.
    pub(super) fn call(&mut self, index: usize, args: &[u64]) -> Result<u64, ExecError> {
        let st = &mut self.state;
        st.regs.clear();
        st.slots.clear();
        st.frames.clear();
        let result = execute(&self.code, st, index, args);
        st.frames.clear();
        result
    }
}

impl State {
    fn push_frame(&mut self, code: &Code, func: usize, args: &[u64], ret_dest: u32) {
        let f = &code.funcs[func];
        let base = self.regs.len();
        let slot_base = self.slots.len();
        self.regs.resize(base + f.regs, 0);
        self.slots.resize(slot_base + f.slots, 0);
        for (&p, &a) in f.params.iter().zip(args) {
            self.regs[base + p as usize] = a;
        }
        self.frames.push(Frame {
            func,
            block: f.entry,
            pc: 0,
            base,
            slot_base,
            ret_dest,
        });
    }
}

fn execute(code: &Code, st: &mut State, index: usize, args: &[u64]) -> Result<u64, ExecError> {
    let mut depth: u64 = 0;
    let mut arg_buf: Vec<u64> = Vec::new();
    st.push_frame(code, index, args, NO_RESULT);
    'frames: loop {
        let frame = st.frames.last().expect("an active frame");
        let (fi, base, slot_base) = (frame.func, frame.base, frame.slot_base);
        let mut block = frame.block;
        let mut pc = frame.pc;
        let read = |regs: &[u64], op: Operand| -> u64 {
            match op {
                Operand::Value(v) => regs[base + v.index()],
                Operand::Int(i) => i as u64,
                Operand::Float(bits) => bits,
                Operand::Bool(b) => b as u64,
            }
        };
        loop {
            let b = &code.funcs[fi].blocks[block];
            while pc < b.ops.len() {
                let op = &b.ops[pc];
                pc += 1;
                let value = match &op.kind {
                    InstKind::Binary { op: bop, lhs, rhs } => bop.eval(read(&st.regs, *lhs), read(&st.regs, *rhs)),
                    InstKind::FNeg(a) => (-f64::from_bits(read(&st.regs, *a))).to_bits(),
                    InstKind::ICmpEq(a, c) => (read(&st.regs, *a) == read(&st.regs, *c)) as u64,
                    InstKind::Select {
                        cond,
                        if_true,
                        if_false,
                    } => {
                        if read(&st.regs, *cond) != 0 {
                            read(&st.regs, *if_true)
                        } else {
                            read(&st.regs, *if_false)
                        }
                    }
                    InstKind::SIToFP(a) => (read(&st.regs, *a) as i64 as f64).to_bits(),
                    InstKind::Load(s) => st.slots[slot_base + s.index()],
                    InstKind::Store { slot, value } => {
                        st.slots[slot_base + slot.index()] = read(&st.regs, *value);
                        continue;
                    }
                    InstKind::DepthEnter => {
                        if depth >= RECURSION_LIMIT {
                            1
                        } else {
                            depth += 1;
                            0
                        }
                    }
                    InstKind::DepthLeave => {
                        depth -= 1;
                        continue;
                    }
                    InstKind::Call { callee, args } => {
                        arg_buf.clear();
                        arg_buf.extend(args.iter().map(|a| read(&st.regs, *a)));
                        match *callee {
                            Callee::Func(target) => {
                                let frame = st.frames.last_mut().expect("an active frame");
                                frame.block = block;
                                frame.pc = pc;
                                st.push_frame(code, target as usize, &arg_buf, op.result);
                                continue 'frames;
                            }
                            Callee::Extern(e) => {
                                let e = e as usize;
                                let values: Vec<Value> = code.extern_params[e]
                                    .iter()
                                    .zip(&arg_buf)
                                    .map(|(&t, &bits)| Value::from_bits(bits, t))
                                    .collect();
                                code.natives[e].invoke(&values).to_bits()
                            }
                        }
                    }
                };
                if op.result != NO_RESULT {
                    st.regs[base + op.result as usize] = value;
                }
            }
            match &b.term {
                Terminator::Br(t) => {
                    block = t.index();
                    pc = 0;
                }
                Terminator::CondBr {
                    cond,
                    then_dest,
                    else_dest,
                } => {
                    block = if read(&st.regs, *cond) != 0 {
                        then_dest.index()
                    } else {
                        else_dest.index()
                    };
                    pc = 0;
                }
                Terminator::Unwind => return Err(ExecError::RecursionLimit),
                Terminator::Ret(v) => {
                    let out = read(&st.regs, *v);
                    let done = st.frames.pop().expect("an active frame");
                    st.regs.truncate(done.base);
                    st.slots.truncate(done.slot_base);
                    match st.frames.last() {
                        None => return Ok(out),
                        Some(caller) => {
                            st.regs[caller.base + done.ret_dest as usize] = out;
                            continue 'frames;
                        }
                    }
                }
            }
        }
    }
}

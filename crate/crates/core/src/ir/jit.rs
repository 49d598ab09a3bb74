//! Native code generation with Cranelift.
//!
//! Every IR function becomes a machine function taking a hidden context
//! pointer first. The context holds the recursion depth and a trap flag: an
//! `unwind` sets the flag and returns, and every call site checks the flag
//! and returns immediately when it is set, so a recursion-limit abort
//! propagates to the host without unwinding machine frames. Natives are
//! reached through one dispatch routine indexed by extern number.

use std::any::Any;
use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};

use cranelift_codegen::ir::condcodes::IntCC;
use cranelift_codegen::ir::immediates::Ieee64;
use cranelift_codegen::ir::{
    self as clif, types, AbiParam, InstBuilder, MemFlagsData, Signature, StackSlotData, StackSlotKind,
};
use cranelift_codegen::isa::{CallConv, OwnedTargetIsa};
use cranelift_codegen::settings::{self, Configurable};
use cranelift_frontend::{FunctionBuilder, FunctionBuilderContext};
use cranelift_jit::{JITBuilder, JITModule};
use cranelift_module::{default_libcall_names, FuncId, Linkage, Module as _};

use super::{BinaryOp, Callee, Cfg, Function, InstKind, Module, Operand, Terminator, Type, ValueId};
use crate::exec::{ExecError, NativeEntry, Value, RECURSION_LIMIT};

const TRAP_RECURSION: u64 = 1;
const TRAP_NATIVE_PANIC: u64 = 2;
const NATIVE_SHIM: &str = "__gpjit_native";
const INVOKE: &str = "__invoke";

/// Shared state between the host and generated code. The first two fields
/// are read and written by machine code at fixed offsets.
#[repr(C)]
struct RuntimeCtx {
    depth: u64,
    trapped: u64,
    natives: Vec<Arc<NativeEntry>>,
    panic: Option<Box<dyn Any + Send>>,
}

const DEPTH_OFFSET: i32 = 0;
const TRAPPED_OFFSET: i32 = 8;

type InvokeFn = unsafe extern "C" fn(*mut RuntimeCtx, *const u64) -> u64;

pub(super) struct JitEngine {
    module: Option<JITModule>,
    invoke: InvokeFn,
    ctx: Box<RuntimeCtx>,
    /// Host stack needed for the deepest permitted recursion, if any.
    stack_hint: Option<usize>,
}

// SAFETY: the JIT module and its code are owned exclusively by this engine;
// nothing in them is tied to the creating thread.
unsafe impl Send for JitEngine {}

impl Drop for JitEngine {
    fn drop(&mut self) {
        if let Some(module) = self.module.take() {
            // SAFETY: `invoke` and every other code pointer die with `self`.
            unsafe { module.free_memory() };
        }
    }
}

fn host_isa() -> Result<OwnedTargetIsa, ExecError> {
    static ISA: OnceLock<Result<OwnedTargetIsa, String>> = OnceLock::new();
    ISA.get_or_init(|| {
        let mut flags = settings::builder();
        let set = |b: &mut settings::Builder, k: &str, v: &str| b.set(k, v).map_err(|e| e.to_string());
        set(&mut flags, "opt_level", "none")?;
        set(&mut flags, "use_colocated_libcalls", "false")?;
        set(
            &mut flags,
            "is_pic",
            if cfg!(target_arch = "x86_64") { "true" } else { "false" },
        )?;
        set(&mut flags, "enable_verifier", if cfg!(test) { "true" } else { "false" })?;
        let builder = cranelift_native::builder().map_err(|e| e.to_string())?;
        builder.finish(settings::Flags::new(flags)).map_err(|e| e.to_string())
    })
    .clone()
    .map_err(ExecError::EngineUnavailable)
}

/// Code generator and target, for report metadata.
pub(crate) fn describe_host() -> String {
    match host_isa() {
        Ok(isa) => format!("cranelift 0.136 {} ({}, opt_level=none)", isa.triple(), isa.name()),
        Err(e) => format!("jit unavailable: {e}"),
    }
}

/// Dispatches a native call from generated code.
extern "C" fn native_shim(ctx: *mut RuntimeCtx, index: u64, args: *const u64, nargs: u64) -> u64 {
    // SAFETY: generated code passes the context it was given and a buffer of
    // `nargs` argument words.
    let ctx = unsafe { &mut *ctx };
    let args = unsafe { std::slice::from_raw_parts(args, nargs as usize) };
    let entry = &ctx.natives[index as usize];
    let values: Vec<Value> = entry
        .params()
        .iter()
        .zip(args)
        .map(|(&t, &bits)| Value::from_bits(bits, t))
        .collect();
    match panic::catch_unwind(AssertUnwindSafe(|| entry.invoke(&values))) {
        Ok(v) => v.to_bits(),
        Err(payload) => {
            ctx.panic = Some(payload);
            ctx.trapped = TRAP_NATIVE_PANIC;
            0
        }
    }
}

fn clif_type(t: Type) -> clif::Type {
    match t {
        Type::I1 => types::I8,
        Type::I64 => types::I64,
        Type::F64 => types::F64,
    }
}

impl JitEngine {
    pub(super) fn new(module: &Module, natives: Vec<Arc<NativeEntry>>, target: usize) -> Result<Self, ExecError> {
        let isa = host_isa()?;
        let mut builder = JITBuilder::with_isa(isa, default_libcall_names());
        builder.symbol(NATIVE_SHIM, native_shim as *const u8);
        let mut jit = JITModule::new(builder);
        let result = compile(&mut jit, module, target);
        let invoke = match result {
            Ok(ptr) => ptr,
            Err(e) => {
                // SAFETY: no code from this module has been handed out.
                unsafe { jit.free_memory() };
                return Err(e);
            }
        };
        let recursive = module
            .functions
            .iter()
            .any(|f| f.live_insts().any(|(_, i)| f.inst(i).kind == InstKind::DepthEnter));
        let stack_hint = recursive.then(|| {
            let widest = module
                .functions
                .iter()
                .map(|f| 256 + 16 * (f.slots.len() + f.value_types.len()))
                .max()
                .unwrap_or(256);
            (RECURSION_LIMIT as usize + 16) * widest + (1 << 20)
        });
        Ok(JitEngine {
            module: Some(jit),
            invoke,
            ctx: Box::new(RuntimeCtx {
                depth: 0,
                trapped: 0,
                natives,
                panic: None,
            }),
            stack_hint,
        })
    }

    pub(super) fn invoke(&mut self, args: &[u64]) -> Result<u64, ExecError> {
        self.ctx.depth = 0;
        self.ctx.trapped = 0;
        let ctx: *mut RuntimeCtx = &mut *self.ctx;
        let f = self.invoke;
        // SAFETY: `f` was compiled for exactly this argument layout and stays
        // valid while `self.module` is alive.
        let call = || unsafe { f(ctx, args.as_ptr()) };
        let out = match self.stack_hint {
            Some(size) => stacker::maybe_grow(size, size, call),
            None => call(),
        };
        match self.ctx.trapped {
            0 => Ok(out),
            TRAP_RECURSION => Err(ExecError::RecursionLimit),
            _ => match self.ctx.panic.take() {
                Some(payload) => panic::resume_unwind(payload),
                None => Err(ExecError::Backend("native call failed".into())),
            },
        }
    }
}

fn signature(call_conv: CallConv, f: &Function) -> Signature {
    let mut sig = Signature::new(call_conv);
    sig.params.push(AbiParam::new(types::I64));
    for t in f.param_types() {
        sig.params.push(AbiParam::new(clif_type(t)));
    }
    sig.returns.push(AbiParam::new(clif_type(f.ret)));
    sig
}

fn backend_err(e: impl std::fmt::Display) -> ExecError {
    ExecError::Backend(e.to_string())
}

/// Compiles every function plus the `__invoke` trampoline for `target` and
/// returns the trampoline's address.
fn compile(jit: &mut JITModule, module: &Module, target: usize) -> Result<InvokeFn, ExecError> {
    let call_conv = jit.isa().default_call_conv();
    let ptr = jit.target_config().pointer_type();
    if ptr != types::I64 {
        return Err(ExecError::EngineUnavailable("only 64-bit hosts are supported".into()));
    }

    let ids: Vec<FuncId> = module
        .functions
        .iter()
        .map(|f| {
            jit.declare_function(&f.name, Linkage::Local, &signature(call_conv, f))
                .map_err(backend_err)
        })
        .collect::<Result<_, _>>()?;
    let mut shim_sig = Signature::new(call_conv);
    for _ in 0..4 {
        shim_sig.params.push(AbiParam::new(types::I64));
    }
    shim_sig.returns.push(AbiParam::new(types::I64));
    let shim = jit
        .declare_function(NATIVE_SHIM, Linkage::Import, &shim_sig)
        .map_err(backend_err)?;

    let mut ctx = jit.make_context();
    let mut fctx = FunctionBuilderContext::new();
    for (fi, f) in module.functions.iter().enumerate() {
        ctx.func.signature = signature(call_conv, f);
        lower_function(jit, module, f, &ids, shim, &mut ctx.func, &mut fctx)?;
        jit.define_function(ids[fi], &mut ctx).map_err(backend_err)?;
        jit.clear_context(&mut ctx);
    }

    // __invoke(ctx, args) -> bits
    let tf = &module.functions[target];
    let mut sig = Signature::new(call_conv);
    sig.params.push(AbiParam::new(types::I64));
    sig.params.push(AbiParam::new(types::I64));
    sig.returns.push(AbiParam::new(types::I64));
    let invoke_id = jit
        .declare_function(INVOKE, Linkage::Local, &sig)
        .map_err(backend_err)?;
    ctx.func.signature = sig;
    {
        let mut b = FunctionBuilder::new(&mut ctx.func, &mut fctx);
        let entry = b.create_block();
        b.append_block_params_for_function_params(entry);
        b.switch_to_block(entry);
        let (vm, args) = (b.block_params(entry)[0], b.block_params(entry)[1]);
        let mut call_args = vec![vm];
        for (k, t) in tf.param_types().into_iter().enumerate() {
            call_args.push(
                b.ins()
                    .load(clif_type(t), MemFlagsData::trusted(), args, (8 * k) as i32),
            );
        }
        let callee = jit.declare_func_in_func(ids[target], b.func);
        let call = b.ins().call(callee, &call_args);
        let r = b.inst_results(call)[0];
        let bits = match tf.ret {
            Type::F64 => b.ins().bitcast(types::I64, MemFlagsData::new(), r),
            Type::I1 => b.ins().uextend(types::I64, r),
            Type::I64 => r,
        };
        b.ins().return_(&[bits]);
        b.seal_all_blocks();
        b.finalize(jit.target_config());
    }
    jit.define_function(invoke_id, &mut ctx).map_err(backend_err)?;
    jit.clear_context(&mut ctx);
    jit.finalize_definitions().map_err(backend_err)?;
    let code = jit.get_finalized_function(invoke_id);
    // SAFETY: the trampoline was built with exactly the `InvokeFn` signature
    // under the host's default calling convention.
    Ok(unsafe { std::mem::transmute::<*const u8, InvokeFn>(code) })
}

fn zero(b: &mut FunctionBuilder<'_>, t: Type) -> clif::Value {
    match t {
        Type::F64 => b.ins().f64const(Ieee64::with_bits(0)),
        other => b.ins().iconst(clif_type(other), 0),
    }
}

fn lower_function(
    jit: &mut JITModule,
    module: &Module,
    f: &Function,
    ids: &[FuncId],
    shim: FuncId,
    func: &mut clif::Function,
    fctx: &mut FunctionBuilderContext,
) -> Result<(), ExecError> {
    let cfg = Cfg::compute(f);
    let mut b = FunctionBuilder::new(func, fctx);
    let blocks: HashMap<super::BlockId, clif::Block> = cfg.rpo().iter().map(|&bb| (bb, b.create_block())).collect();
    let slots: Vec<clif::StackSlot> = f
        .slots
        .iter()
        .map(|_| b.create_sized_stack_slot(StackSlotData::new(StackSlotKind::ExplicitSlot, 8, 3)))
        .collect();
    let max_args = f
        .live_insts()
        .filter_map(|(_, i)| match &f.inst(i).kind {
            InstKind::Call {
                callee: Callee::Extern(_),
                args,
            } => Some(args.len()),
            _ => None,
        })
        .max();
    let arg_area = max_args
        .map(|n| b.create_sized_stack_slot(StackSlotData::new(StackSlotKind::ExplicitSlot, 8 * n.max(1) as u32, 3)));

    let mut values: HashMap<ValueId, clif::Value> = HashMap::new();
    let mut func_refs = HashMap::new();
    let mut shim_ref = None;

    // Shared early-exit block for trapped calls, created on first use.
    let mut bail: Option<clif::Block> = None;

    let entry = blocks[&f.entry()];
    b.append_block_params_for_function_params(entry);
    b.switch_to_block(entry);
    let vm = b.block_params(entry)[0];
    for (k, &p) in f.params.iter().enumerate() {
        values.insert(p, b.block_params(entry)[k + 1]);
    }

    for (pos, &bb) in cfg.rpo().iter().enumerate() {
        if pos > 0 {
            b.switch_to_block(blocks[&bb]);
        }
        let block = f.block(bb);
        for &i in &block.insts {
            let inst = f.inst(i);
            let get =
                |values: &HashMap<ValueId, clif::Value>, b: &mut FunctionBuilder<'_>, op: Operand| -> clif::Value {
                    match op {
                        Operand::Value(v) => values[&v],
                        Operand::Int(c) => b.ins().iconst(types::I64, c),
                        Operand::Float(bits) => b.ins().f64const(Ieee64::with_bits(bits)),
                        Operand::Bool(c) => b.ins().iconst(types::I8, c as i64),
                    }
                };
            let result: Option<clif::Value> = match &inst.kind {
                InstKind::Binary { op, lhs, rhs } => {
                    let x = get(&values, &mut b, *lhs);
                    Some(match op {
                        BinaryOp::Add => {
                            let y = get(&values, &mut b, *rhs);
                            b.ins().iadd(x, y)
                        }
                        BinaryOp::Sub => {
                            let y = get(&values, &mut b, *rhs);
                            b.ins().isub(x, y)
                        }
                        BinaryOp::Mul => {
                            let y = get(&values, &mut b, *rhs);
                            b.ins().imul(x, y)
                        }
                        BinaryOp::SDiv | BinaryOp::SRem => lower_division(&mut b, *op, x, *rhs, &values),
                        BinaryOp::FAdd => {
                            let y = get(&values, &mut b, *rhs);
                            b.ins().fadd(x, y)
                        }
                        BinaryOp::FSub => {
                            let y = get(&values, &mut b, *rhs);
                            b.ins().fsub(x, y)
                        }
                        BinaryOp::FMul => {
                            let y = get(&values, &mut b, *rhs);
                            b.ins().fmul(x, y)
                        }
                        BinaryOp::FDiv => {
                            let y = get(&values, &mut b, *rhs);
                            b.ins().fdiv(x, y)
                        }
                    })
                }
                InstKind::FNeg(a) => {
                    let x = get(&values, &mut b, *a);
                    Some(b.ins().fneg(x))
                }
                InstKind::ICmpEq(a, c) => {
                    let x = get(&values, &mut b, *a);
                    let y = get(&values, &mut b, *c);
                    Some(b.ins().icmp(IntCC::Equal, x, y))
                }
                InstKind::Select {
                    cond,
                    if_true,
                    if_false,
                } => {
                    let c = get(&values, &mut b, *cond);
                    let x = get(&values, &mut b, *if_true);
                    let y = get(&values, &mut b, *if_false);
                    Some(b.ins().select(c, x, y))
                }
                InstKind::SIToFP(a) => {
                    let x = get(&values, &mut b, *a);
                    Some(b.ins().fcvt_from_sint(types::F64, x))
                }
                InstKind::Load(s) => {
                    let ty = clif_type(f.slots[s.index()].ty);
                    Some(b.ins().stack_load(types::I64, ty, slots[s.index()], 0))
                }
                InstKind::Store { slot, value } => {
                    let x = get(&values, &mut b, *value);
                    b.ins().stack_store(types::I64, x, slots[slot.index()], 0);
                    None
                }
                InstKind::DepthEnter => {
                    let depth = b.ins().load(types::I64, MemFlagsData::trusted(), vm, DEPTH_OFFSET);
                    let over = b
                        .ins()
                        .icmp_imm_s(IntCC::UnsignedGreaterThanOrEqual, depth, RECURSION_LIMIT as i64);
                    let bumped = b.ins().iadd_imm_s(depth, 1);
                    let next = b.ins().select(over, depth, bumped);
                    b.ins().store(MemFlagsData::trusted(), next, vm, DEPTH_OFFSET);
                    Some(over)
                }
                InstKind::DepthLeave => {
                    let depth = b.ins().load(types::I64, MemFlagsData::trusted(), vm, DEPTH_OFFSET);
                    let next = b.ins().iadd_imm_s(depth, -1);
                    b.ins().store(MemFlagsData::trusted(), next, vm, DEPTH_OFFSET);
                    None
                }
                InstKind::Call { callee, args } => {
                    let r = match *callee {
                        Callee::Func(t) => {
                            let mut call_args = vec![vm];
                            for a in args {
                                call_args.push(get(&values, &mut b, *a));
                            }
                            let fref = *func_refs
                                .entry(t)
                                .or_insert_with(|| jit.declare_func_in_func(ids[t as usize], b.func));
                            let call = b.ins().call(fref, &call_args);
                            b.inst_results(call)[0]
                        }
                        Callee::Extern(e) => {
                            let area = arg_area.expect("argument area sized for every extern call");
                            for (k, a) in args.iter().enumerate() {
                                let x = get(&values, &mut b, *a);
                                b.ins().stack_store(types::I64, x, area, (8 * k) as i32);
                            }
                            let addr = b.ins().stack_addr(types::I64, area, 0);
                            let index = b.ins().iconst(types::I64, e as i64);
                            let n = b.ins().iconst(types::I64, args.len() as i64);
                            let sref = *shim_ref.get_or_insert_with(|| jit.declare_func_in_func(shim, b.func));
                            let call = b.ins().call(sref, &[vm, index, addr, n]);
                            let bits = b.inst_results(call)[0];
                            match module.externs[e as usize].ret {
                                Type::F64 => b.ins().bitcast(types::F64, MemFlagsData::new(), bits),
                                _ => bits,
                            }
                        }
                    };
                    // Leave at once if the callee trapped.
                    let trapped = b.ins().load(types::I64, MemFlagsData::trusted(), vm, TRAPPED_OFFSET);
                    let cont = b.create_block();
                    let exit = *bail.get_or_insert_with(|| b.create_block());
                    b.ins().brif(trapped, exit, &[], cont, &[]);
                    b.switch_to_block(cont);
                    Some(r)
                }
            };
            if let (Some(v), Some(r)) = (inst.result, result) {
                values.insert(v, r);
            }
        }
        let get_term = |values: &HashMap<ValueId, clif::Value>, b: &mut FunctionBuilder<'_>, op: Operand| match op {
            Operand::Value(v) => values[&v],
            Operand::Int(c) => b.ins().iconst(types::I64, c),
            Operand::Float(bits) => b.ins().f64const(Ieee64::with_bits(bits)),
            Operand::Bool(c) => b.ins().iconst(types::I8, c as i64),
        };
        match &block.term {
            Terminator::Ret(v) => {
                let x = get_term(&values, &mut b, *v);
                b.ins().return_(&[x]);
            }
            Terminator::Br(t) => {
                b.ins().jump(blocks[t], &[]);
            }
            Terminator::CondBr {
                cond,
                then_dest,
                else_dest,
            } => {
                let c = get_term(&values, &mut b, *cond);
                b.ins().brif(c, blocks[then_dest], &[], blocks[else_dest], &[]);
            }
            Terminator::Unwind => {
                let flag = b.ins().iconst(types::I64, TRAP_RECURSION as i64);
                b.ins().store(MemFlagsData::trusted(), flag, vm, TRAPPED_OFFSET);
                let z = zero(&mut b, f.ret);
                b.ins().return_(&[z]);
            }
        }
    }

    if let Some(exit) = bail {
        b.switch_to_block(exit);
        let z = zero(&mut b, f.ret);
        b.ins().return_(&[z]);
    }

    b.seal_all_blocks();
    b.finalize(jit.target_config());
    Ok(())
}

/// Integer division and remainder with the IR's total semantics: a zero
/// divisor gives 0 and `MIN / -1` wraps. Constant divisors other than 0 and
/// -1 need no guard.
fn lower_division(
    b: &mut FunctionBuilder<'_>,
    op: BinaryOp,
    x: clif::Value,
    rhs: Operand,
    values: &HashMap<ValueId, clif::Value>,
) -> clif::Value {
    if let Operand::Int(c) = rhs {
        if c != 0 && c != -1 {
            let y = b.ins().iconst(types::I64, c);
            return match op {
                BinaryOp::SDiv => b.ins().sdiv(x, y),
                _ => b.ins().srem(x, y),
            };
        }
    }
    let y = match rhs {
        Operand::Value(v) => values[&v],
        Operand::Int(c) => b.ins().iconst(types::I64, c),
        _ => unreachable!("verified integer operand"),
    };
    let one = b.ins().iconst(types::I64, 1);
    let is_zero = b.ins().icmp_imm_s(IntCC::Equal, y, 0);
    let is_minus_one = b.ins().icmp_imm_s(IntCC::Equal, y, -1);
    let guard = b.ins().bor(is_zero, is_minus_one);
    let safe = b.ins().select(guard, one, y);
    let zero = b.ins().iconst(types::I64, 0);
    match op {
        BinaryOp::SDiv => {
            let q = b.ins().sdiv(x, safe);
            let neg = b.ins().ineg(x);
            let q = b.ins().select(is_minus_one, neg, q);
            b.ins().select(is_zero, zero, q)
        }
        _ => {
            // x % 1 == 0 covers both guarded divisors.
            b.ins().srem(x, safe)
        }
    }
}

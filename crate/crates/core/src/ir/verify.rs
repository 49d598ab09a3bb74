//! Structural and type verification of modules.

use std::collections::HashSet;

use super::{Cfg, Function, InstKind, Module, Operand, Terminator, Type, ValueId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("in function `{function}`: {message}")]
pub struct VerifyError {
    pub function: String,
    pub message: String,
}

pub fn verify_module(module: &Module) -> Result<(), VerifyError> {
    let mut names = HashSet::new();
    for f in &module.functions {
        if !names.insert(f.name.as_str()) {
            return Err(err(f, format!("duplicate function name `{}`", f.name)));
        }
    }
    for e in &module.externs {
        if !names.insert(e.name.as_str()) {
            return Err(VerifyError {
                function: e.name.clone(),
                message: "extern name clashes with another symbol".into(),
            });
        }
    }
    module.functions.iter().try_for_each(|f| verify_function(module, f))
}

fn err(f: &Function, message: String) -> VerifyError {
    VerifyError {
        function: f.name.clone(),
        message,
    }
}

fn verify_function(module: &Module, f: &Function) -> Result<(), VerifyError> {
    if f.layout.is_empty() {
        return Err(err(f, "function has no blocks".into()));
    }
    let mut in_layout = vec![false; f.blocks.len()];
    for &b in &f.layout {
        if b.index() >= f.blocks.len() || in_layout[b.index()] {
            return Err(err(f, format!("invalid or repeated block {}", b.0)));
        }
        in_layout[b.index()] = true;
    }
    for &b in &f.layout {
        for s in f.block(b).term.successors() {
            if !in_layout.get(s.index()).copied().unwrap_or(false) {
                return Err(err(
                    f,
                    format!("block `{}` branches to a missing block", f.block(b).label),
                ));
            }
            if s == f.entry() {
                return Err(err(f, "the entry block has a predecessor".into()));
            }
        }
    }

    // Definition sites: parameters at the entry, results where placed.
    let mut def_site: Vec<Option<(usize, usize)>> = vec![None; f.value_types.len()];
    let mut placed = vec![false; f.insts.len()];
    for &p in &f.params {
        def_site[p.index()] = Some((f.entry().index(), 0));
    }
    for &b in &f.layout {
        for (pos, &i) in f.block(b).insts.iter().enumerate() {
            if i.index() >= f.insts.len() || placed[i.index()] {
                return Err(err(f, format!("instruction {} placed twice or missing", i.0)));
            }
            placed[i.index()] = true;
            if let Some(r) = f.inst(i).result {
                if def_site[r.index()].is_some() {
                    return Err(err(f, format!("value {} defined twice", r.0)));
                }
                def_site[r.index()] = Some((b.index(), pos + 1));
            }
        }
    }

    let cfg = Cfg::compute(f);
    let check_use = |v: ValueId, block: usize, pos: usize| -> Result<(), VerifyError> {
        let Some((db, dpos)) = def_site.get(v.index()).copied().flatten() else {
            return Err(err(f, format!("use of undefined value {}", v.0)));
        };
        let use_block = super::BlockId(block as u32);
        if !cfg.is_reachable(use_block) {
            return Ok(());
        }
        let dominated = if db == block {
            dpos <= pos
        } else {
            cfg.dominates(super::BlockId(db as u32), use_block)
        };
        if dominated {
            Ok(())
        } else {
            Err(err(f, format!("value {} does not dominate its use", v.0)))
        }
    };
    let expect = |op: Operand, ty: Type, what: &str| -> Result<(), VerifyError> {
        let found = f.operand_type(op);
        if found == ty {
            Ok(())
        } else {
            Err(err(f, format!("{what}: expected {ty}, found {found}")))
        }
    };

    for &b in &f.layout {
        let block = f.block(b);
        for (pos, &i) in block.insts.iter().enumerate() {
            let inst = f.inst(i);
            for op in inst.kind.operands() {
                if let Operand::Value(v) = op {
                    check_use(v, b.index(), pos)?;
                }
            }
            let want = match &inst.kind {
                InstKind::Binary { op, lhs, rhs } => {
                    let t = op.operand_type();
                    expect(*lhs, t, op.mnemonic())?;
                    expect(*rhs, t, op.mnemonic())?;
                    Some(t)
                }
                InstKind::FNeg(a) => {
                    expect(*a, Type::F64, "fneg")?;
                    Some(Type::F64)
                }
                InstKind::ICmpEq(a, c) => {
                    expect(*a, Type::I64, "icmp")?;
                    expect(*c, Type::I64, "icmp")?;
                    Some(Type::I1)
                }
                InstKind::Select {
                    cond,
                    if_true,
                    if_false,
                } => {
                    expect(*cond, Type::I1, "select condition")?;
                    let t = f.operand_type(*if_true);
                    expect(*if_false, t, "select arms")?;
                    Some(t)
                }
                InstKind::SIToFP(a) => {
                    expect(*a, Type::I64, "sitofp")?;
                    Some(Type::F64)
                }
                InstKind::Load(s) => Some(
                    f.slots
                        .get(s.index())
                        .ok_or_else(|| err(f, format!("load from missing slot {}", s.0)))?
                        .ty,
                ),
                InstKind::Store { slot, value } => {
                    let ty = f
                        .slots
                        .get(slot.index())
                        .ok_or_else(|| err(f, format!("store to missing slot {}", slot.0)))?
                        .ty;
                    expect(*value, ty, "store")?;
                    None
                }
                InstKind::Call { callee, args } => {
                    let valid = match callee {
                        super::Callee::Func(i) => (*i as usize) < module.functions.len(),
                        super::Callee::Extern(i) => (*i as usize) < module.externs.len(),
                    };
                    if !valid {
                        return Err(err(f, "call to a missing callee".into()));
                    }
                    let (params, ret) = module.callee_signature(*callee);
                    if params.len() != args.len() {
                        return Err(err(
                            f,
                            format!("call to `{}` has wrong arity", module.callee_name(*callee)),
                        ));
                    }
                    for (a, t) in args.iter().zip(params) {
                        expect(*a, t, "call argument")?;
                    }
                    Some(ret)
                }
                InstKind::DepthEnter => Some(Type::I1),
                InstKind::DepthLeave => None,
            };
            let got = inst.result.map(|r| f.value_type(r));
            if got != want {
                return Err(err(f, format!("result type of instruction {} is wrong", i.0)));
            }
        }
        let end = block.insts.len();
        for op in block.term.operands() {
            if let Operand::Value(v) = op {
                check_use(v, b.index(), end)?;
            }
        }
        match &block.term {
            Terminator::Ret(v) => expect(*v, f.ret, "return value")?,
            Terminator::CondBr { cond, .. } => expect(*cond, Type::I1, "branch condition")?,
            Terminator::Br(_) | Terminator::Unwind => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::BinaryOp;

    fn single(ret: Operand) -> Module {
        let mut f = Function::new("f", &[("a".into(), Type::I64)], Type::I64);
        let b = f.add_block("entry");
        f.block_mut(b).term = Terminator::Ret(ret);
        Module {
            functions: vec![f],
            externs: vec![],
        }
    }

    #[test]
    fn accepts_well_formed() {
        let m = single(Operand::Value(ValueId(0)));
        verify_module(&m).unwrap();
    }

    #[test]
    fn rejects_return_type_mismatch() {
        let m = single(Operand::float(1.0));
        assert!(verify_module(&m).is_err());
    }

    #[test]
    fn rejects_use_before_def() {
        let mut m = single(Operand::Int(0));
        let f = &mut m.functions[0];
        let entry = f.entry();
        let v = f.new_value(Type::I64);
        f.push(
            entry,
            InstKind::Binary {
                op: BinaryOp::Add,
                lhs: Operand::Value(v),
                rhs: Operand::Int(1),
            },
            Some(Type::I64),
        );
        assert!(verify_module(&m).is_err());
    }

    #[test]
    fn rejects_branch_to_entry() {
        let mut m = single(Operand::Int(0));
        let f = &mut m.functions[0];
        let entry = f.entry();
        let next = f.add_block("next");
        f.block_mut(entry).term = Terminator::Br(next);
        f.block_mut(next).term = Terminator::Br(entry);
        assert!(verify_module(&m).is_err());
    }
}

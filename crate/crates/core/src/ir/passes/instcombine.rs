//! Local simplification: constant folding, algebraic identities and
//! canonicalization, followed by removal of dead stores and dead code.
//!
//! Floating-point rewrites are restricted to identities that are exact for
//! every input, so optimized doubles stay bit-identical.

use super::{apply_replacements, dead_code_elimination, remove_unread_slots, resolve};
use crate::ir::{BinaryOp, Function, InstKind, Operand};

pub(super) fn run(f: &mut Function) {
    loop {
        let mut changed = combine(f);
        changed |= remove_unread_slots(f);
        changed |= dead_code_elimination(f);
        if !changed {
            break;
        }
    }
}

/// One sweep over all live instructions; returns whether anything changed.
fn combine(f: &mut Function) -> bool {
    let mut map: Vec<Option<Operand>> = vec![None; f.value_types.len()];
    let mut changed = false;
    let order: Vec<_> = f.live_insts().map(|(_, i)| i).collect();
    for i in order {
        let inst = &mut f.insts[i.index()];
        for op in inst.kind.operands_mut() {
            let r = resolve(&map, *op);
            if r != *op {
                *op = r;
                changed = true;
            }
        }
        let Some(result) = inst.result else { continue };
        let step = simplify(&inst.kind);
        match step {
            Step::Keep => {}
            Step::Replace(op) => {
                map[result.index()] = Some(op);
                changed = true;
            }
            Step::Rewrite(kind) => {
                inst.kind = kind;
                changed = true;
            }
        }
    }
    if changed {
        apply_replacements(f, &map);
    }
    changed
}

enum Step {
    Keep,
    Replace(Operand),
    Rewrite(InstKind),
}

fn simplify(kind: &InstKind) -> Step {
    match *kind {
        InstKind::Binary { op, lhs, rhs } => simplify_binary(op, lhs, rhs),
        InstKind::FNeg(Operand::Float(bits)) => Step::Replace(Operand::Float((-f64::from_bits(bits)).to_bits())),
        InstKind::SIToFP(Operand::Int(i)) => Step::Replace(Operand::float(i as f64)),
        InstKind::ICmpEq(a, b) => match (a, b) {
            (Operand::Int(x), Operand::Int(y)) => Step::Replace(Operand::Bool(x == y)),
            (Operand::Value(x), Operand::Value(y)) if x == y => Step::Replace(Operand::Bool(true)),
            (Operand::Int(_), Operand::Value(_)) => Step::Rewrite(InstKind::ICmpEq(b, a)),
            _ => Step::Keep,
        },
        InstKind::Select {
            cond,
            if_true,
            if_false,
        } => match cond {
            Operand::Bool(true) => Step::Replace(if_true),
            Operand::Bool(false) => Step::Replace(if_false),
            _ if if_true == if_false => Step::Replace(if_true),
            _ => Step::Keep,
        },
        _ => Step::Keep,
    }
}

fn simplify_binary(op: BinaryOp, lhs: Operand, rhs: Operand) -> Step {
    if let (Some(a), Some(b)) = (lhs.const_bits(), rhs.const_bits()) {
        let bits = op.eval(a, b);
        return Step::Replace(match op.operand_type() {
            crate::ir::Type::F64 => Operand::Float(bits),
            _ => Operand::Int(bits as i64),
        });
    }
    if op.is_commutative() && lhs.is_const() && !rhs.is_const() {
        return Step::Rewrite(InstKind::Binary { op, lhs: rhs, rhs: lhs });
    }
    let same = lhs == rhs && !lhs.is_const();
    let one = Operand::float(1.0);
    match (op, rhs) {
        (BinaryOp::Add, Operand::Int(0)) | (BinaryOp::Sub, Operand::Int(0)) => Step::Replace(lhs),
        (BinaryOp::Mul, Operand::Int(1)) | (BinaryOp::SDiv, Operand::Int(1)) => Step::Replace(lhs),
        (BinaryOp::Mul, Operand::Int(0)) => Step::Replace(Operand::Int(0)),
        (BinaryOp::SRem, Operand::Int(1)) => Step::Replace(Operand::Int(0)),
        (BinaryOp::Sub, _) if same => Step::Replace(Operand::Int(0)),
        (BinaryOp::Sub, Operand::Int(c)) => Step::Rewrite(InstKind::Binary {
            op: BinaryOp::Add,
            lhs,
            rhs: Operand::Int(c.wrapping_neg()),
        }),
        // Exact for every double including signed zeros; NaN stays NaN.
        (BinaryOp::FMul, r) | (BinaryOp::FDiv, r) if r == one => Step::Replace(lhs),
        (BinaryOp::FAdd, Operand::Float(b)) if b == (-0.0f64).to_bits() => Step::Replace(lhs),
        (BinaryOp::FSub, Operand::Float(b)) if b == 0.0f64.to_bits() => Step::Replace(lhs),
        _ => Step::Keep,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{BlockId, Terminator, Type};

    fn single_binary(op: BinaryOp, lhs: Operand, rhs: Operand, ty: Type) -> Function {
        let mut f = Function::new("f", &[("a".into(), ty)], ty);
        let b = f.add_block("entry");
        let v = f
            .push(b, InstKind::Binary { op, lhs, rhs }, Some(op.operand_type()))
            .unwrap();
        f.block_mut(b).term = Terminator::Ret(Operand::Value(v));
        f
    }

    fn param(f: &Function) -> Operand {
        Operand::Value(f.params[0])
    }

    #[test]
    fn folds_constants_with_protected_semantics() {
        let mut f = single_binary(BinaryOp::Add, Operand::Int(i64::MAX), Operand::Int(1), Type::I64);
        run(&mut f);
        assert_eq!(f.block(BlockId(0)).term, Terminator::Ret(Operand::Int(i64::MIN)));
        assert_eq!(BinaryOp::SDiv.eval(i64::MIN as u64, -1i64 as u64), i64::MIN as u64);
        assert_eq!(BinaryOp::SDiv.eval(5, 0), 0);
    }

    #[test]
    fn integer_identities() {
        let p = Operand::Value(crate::ir::ValueId(0));
        for (op, c) in [(BinaryOp::Add, 0), (BinaryOp::Mul, 1), (BinaryOp::Sub, 0)] {
            let mut f = single_binary(op, p, Operand::Int(c), Type::I64);
            run(&mut f);
            assert_eq!(f.block(BlockId(0)).term, Terminator::Ret(param(&f)));
            assert_eq!(f.inst_count(), 0);
        }
    }

    #[test]
    fn inexact_float_identity_is_kept() {
        let p = Operand::Value(crate::ir::ValueId(0));
        // x + 0.0 turns -0.0 into +0.0, so it must stay.
        let mut f = single_binary(BinaryOp::FAdd, p, Operand::float(0.0), Type::F64);
        run(&mut f);
        assert_eq!(f.inst_count(), 1);
        let mut g = single_binary(BinaryOp::FMul, p, Operand::float(1.0), Type::F64);
        run(&mut g);
        assert_eq!(g.inst_count(), 0);
    }

    #[test]
    fn canonicalizes_constant_to_the_right() {
        let p = Operand::Value(crate::ir::ValueId(0));
        let mut f = single_binary(BinaryOp::Mul, Operand::Int(2), p, Type::I64);
        run(&mut f);
        let (_, i) = f.live_insts().next().unwrap();
        assert_eq!(
            f.inst(i).kind,
            InstKind::Binary {
                op: BinaryOp::Mul,
                lhs: p,
                rhs: Operand::Int(2)
            }
        );
    }
}

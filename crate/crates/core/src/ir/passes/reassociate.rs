//! Reassociation of integer `add` and `mul` trees.
//!
//! Each maximal tree of one operator (interior nodes used only inside the
//! tree) is flattened, its constants are folded into a single operand, and the
//! remaining leaves are re-chained in definition order with the constant
//! last. Wrapping arithmetic makes any order give the same bits. Floating
//! point is left alone.

use super::{apply_replacements, dead_code_elimination};
use crate::ir::{BinaryOp, Function, InstId, InstKind, Operand, ValueId};

pub(super) fn run(f: &mut Function) {
    let uses = f.use_counts();
    let mut defining: Vec<Option<InstId>> = vec![None; f.value_types.len()];
    for (_, i) in f.live_insts() {
        if let Some(r) = f.inst(i).result {
            defining[r.index()] = Some(i);
        }
    }
    let single_use_of = |v: ValueId, op: BinaryOp, f: &Function| -> Option<InstId> {
        let i = defining[v.index()]?;
        match f.inst(i).kind {
            InstKind::Binary { op: o, .. } if o == op && uses[v.index()] == 1 => Some(i),
            _ => None,
        }
    };

    let mut replacements: Vec<Option<Operand>> = vec![None; f.value_types.len()];
    let mut changed = false;
    for bi in 0..f.layout.len() {
        let b = f.layout[bi];
        let mut pos = 0;
        while pos < f.blocks[b.index()].insts.len() {
            let root = f.blocks[b.index()].insts[pos];
            let (op, root_result) = match (&f.inst(root).kind, f.inst(root).result) {
                (InstKind::Binary { op, .. }, Some(r)) if matches!(op, BinaryOp::Add | BinaryOp::Mul) => (*op, r),
                _ => {
                    pos += 1;
                    continue;
                }
            };
            // Only roots: values not feeding a same-op single-use parent.
            if is_interior(f, root_result, op, &uses) {
                pos += 1;
                continue;
            }
            let mut leaves = Vec::new();
            let mut interior = 0usize;
            let mut stack = vec![root];
            while let Some(i) = stack.pop() {
                let InstKind::Binary { lhs, rhs, .. } = f.inst(i).kind else {
                    unreachable!()
                };
                for operand in [rhs, lhs] {
                    match operand.as_value().and_then(|v| single_use_of(v, op, f)) {
                        Some(child) => {
                            interior += 1;
                            stack.push(child);
                        }
                        None => leaves.push(operand),
                    }
                }
            }
            let constants: Vec<i64> = leaves
                .iter()
                .filter_map(|l| match l {
                    Operand::Int(c) => Some(*c),
                    _ => None,
                })
                .collect();
            let mut values: Vec<ValueId> = leaves.iter().filter_map(|l| l.as_value()).collect();
            values.sort();
            let folded = constants.iter().fold(identity(op), |acc, &c| combine(op, acc, c));
            let mut chain: Vec<Operand> = values.iter().map(|&v| Operand::Value(v)).collect();
            if op == BinaryOp::Mul && folded == 0 {
                chain.clear();
            }
            if folded != identity(op) || chain.is_empty() {
                chain.push(Operand::Int(folded));
            }
            let old_shape = interior + 1;
            let new_shape = chain.len().saturating_sub(1);
            let needs_rebuild = constants.len() > 1 || new_shape < old_shape;
            if !needs_rebuild {
                pos += 1;
                continue;
            }
            // Rebuild in front of the root; the old interior nodes become dead.
            let mut acc = chain[0];
            let mut inserted = 0;
            let last = chain.len() - 1;
            for (k, &next) in chain.iter().enumerate().skip(1) {
                if k == last {
                    f.insts[root.index()].kind = InstKind::Binary {
                        op,
                        lhs: acc,
                        rhs: next,
                    };
                    break;
                }
                let id = f.create_inst(
                    InstKind::Binary {
                        op,
                        lhs: acc,
                        rhs: next,
                    },
                    Some(op.operand_type()),
                );
                f.blocks[b.index()].insts.insert(pos + inserted, id);
                inserted += 1;
                acc = Operand::Value(f.inst(id).result.expect("binary has a result"));
            }
            if chain.len() == 1 {
                // The whole tree collapsed to a constant or a single value.
                replacements[root_result.index()] = Some(chain[0]);
            }
            changed = true;
            pos += inserted + 1;
        }
    }
    if changed {
        replacements.resize(f.value_types.len(), None);
        apply_replacements(f, &replacements);
        dead_code_elimination(f);
    }
}

fn is_interior(f: &Function, v: ValueId, op: BinaryOp, uses: &[usize]) -> bool {
    if uses[v.index()] != 1 {
        return false;
    }
    f.live_insts().any(|(_, i)| match f.inst(i).kind {
        InstKind::Binary { op: o, lhs, rhs } => o == op && (lhs == Operand::Value(v) || rhs == Operand::Value(v)),
        _ => false,
    })
}

fn identity(op: BinaryOp) -> i64 {
    match op {
        BinaryOp::Mul => 1,
        _ => 0,
    }
}

fn combine(op: BinaryOp, a: i64, b: i64) -> i64 {
    match op {
        BinaryOp::Mul => a.wrapping_mul(b),
        _ => a.wrapping_add(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Terminator, Type};

    /// ((a + 3) + b) + 4
    fn sample() -> Function {
        let mut f = Function::new("f", &[("a".into(), Type::I64), ("b".into(), Type::I64)], Type::I64);
        let e = f.add_block("entry");
        let (a, b) = (Operand::Value(f.params[0]), Operand::Value(f.params[1]));
        let add = |lhs, rhs| InstKind::Binary {
            op: BinaryOp::Add,
            lhs,
            rhs,
        };
        let t1 = f.push(e, add(a, Operand::Int(3)), Some(Type::I64)).unwrap();
        let t2 = f.push(e, add(Operand::Value(t1), b), Some(Type::I64)).unwrap();
        let t3 = f
            .push(e, add(Operand::Value(t2), Operand::Int(4)), Some(Type::I64))
            .unwrap();
        f.block_mut(e).term = Terminator::Ret(Operand::Value(t3));
        f
    }

    #[test]
    fn folds_scattered_constants() {
        let mut f = sample();
        run(&mut f);
        assert_eq!(f.inst_count(), 2);
        let dump = crate::ir::Module {
            functions: vec![f],
            externs: vec![],
        }
        .dump();
        assert!(dump.contains("add i64 %a, %b"), "{dump}");
        assert!(dump.contains(", 7"), "{dump}");
    }

    #[test]
    fn leaves_simple_trees_alone() {
        let mut f = Function::new("f", &[("a".into(), Type::I64)], Type::I64);
        let e = f.add_block("entry");
        let a = Operand::Value(f.params[0]);
        let v = f
            .push(
                e,
                InstKind::Binary {
                    op: BinaryOp::Mul,
                    lhs: a,
                    rhs: Operand::Int(2),
                },
                Some(Type::I64),
            )
            .unwrap();
        f.block_mut(e).term = Terminator::Ret(Operand::Value(v));
        let before = f.clone();
        run(&mut f);
        assert_eq!(f, before);
    }
}

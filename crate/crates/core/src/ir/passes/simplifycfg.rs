//! Control-flow cleanup: constant branches become jumps, unreachable blocks
//! are dropped, straight-line block pairs are merged and empty forwarding
//! blocks are bypassed.

use crate::ir::{Cfg, Function, Operand, Terminator};

pub(super) fn run(f: &mut Function) {
    loop {
        let mut changed = fold_branches(f);
        changed |= remove_unreachable(f);
        changed |= bypass_empty(f);
        changed |= merge_straight_lines(f);
        if !changed {
            break;
        }
    }
}

fn fold_branches(f: &mut Function) -> bool {
    let mut changed = false;
    for &b in &f.layout {
        let term = &mut f.blocks[b.index()].term;
        if let Terminator::CondBr {
            cond,
            then_dest,
            else_dest,
        } = *term
        {
            let target = match cond {
                Operand::Bool(true) => Some(then_dest),
                Operand::Bool(false) => Some(else_dest),
                _ if then_dest == else_dest => Some(then_dest),
                _ => None,
            };
            if let Some(t) = target {
                *term = Terminator::Br(t);
                changed = true;
            }
        }
    }
    changed
}

fn remove_unreachable(f: &mut Function) -> bool {
    let cfg = Cfg::compute(f);
    let before = f.layout.len();
    f.layout.retain(|&b| cfg.is_reachable(b));
    f.layout.len() != before
}

/// Redirects branches that target an empty block ending in `br` straight to
/// that block's destination.
fn bypass_empty(f: &mut Function) -> bool {
    let entry = f.entry();
    let mut changed = false;
    for k in 0..f.layout.len() {
        let e = f.layout[k];
        if e == entry || !f.block(e).insts.is_empty() {
            continue;
        }
        let Terminator::Br(target) = f.block(e).term else {
            continue;
        };
        if target == e {
            continue;
        }
        for &b in &f.layout {
            if b != e && f.blocks[b.index()].term.successors().contains(&e) {
                f.blocks[b.index()].term.retarget(e, target);
                changed = true;
            }
        }
    }
    if changed {
        remove_unreachable(f);
    }
    changed
}

/// Appends a block to its only predecessor when that predecessor jumps
/// unconditionally to it.
fn merge_straight_lines(f: &mut Function) -> bool {
    let mut changed = false;
    loop {
        let cfg = Cfg::compute(f);
        let candidate = f.layout.iter().copied().find_map(|b| match f.block(b).term {
            Terminator::Br(s) if s != b && s != f.entry() && cfg.preds(s) == [b] => Some((b, s)),
            _ => None,
        });
        let Some((b, s)) = candidate else { return changed };
        let moved = std::mem::take(&mut f.blocks[s.index()].insts);
        let term = std::mem::replace(&mut f.blocks[s.index()].term, Terminator::Unwind);
        let block = &mut f.blocks[b.index()];
        block.insts.extend(moved);
        block.term = term;
        f.layout.retain(|&x| x != s);
        changed = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{BinaryOp, InstKind, Type};

    #[test]
    fn folds_constant_guard_and_merges() {
        let mut f = Function::new("f", &[("a".into(), Type::I64)], Type::I64);
        let entry = f.add_block("entry");
        let body = f.add_block("body");
        let trap = f.add_block("overflow");
        let hop = f.add_block("hop");
        f.block_mut(entry).term = Terminator::CondBr {
            cond: Operand::Bool(false),
            then_dest: trap,
            else_dest: hop,
        };
        f.block_mut(hop).term = Terminator::Br(body);
        f.block_mut(trap).term = Terminator::Unwind;
        let a = Operand::Value(f.params[0]);
        let v = f
            .push(
                body,
                InstKind::Binary {
                    op: BinaryOp::Add,
                    lhs: a,
                    rhs: a,
                },
                Some(Type::I64),
            )
            .unwrap();
        f.block_mut(body).term = Terminator::Ret(Operand::Value(v));
        run(&mut f);
        assert_eq!(f.layout, vec![entry]);
        assert_eq!(f.inst_count(), 1);
        assert_eq!(f.block(entry).term, Terminator::Ret(Operand::Value(v)));
    }

    #[test]
    fn keeps_real_branches() {
        let mut f = Function::new("f", &[], Type::I64);
        let entry = f.add_block("entry");
        let cond = f.push(entry, InstKind::DepthEnter, Some(Type::I1)).unwrap();
        let a = f.add_block("a");
        let b = f.add_block("b");
        f.block_mut(entry).term = Terminator::CondBr {
            cond: Operand::Value(cond),
            then_dest: a,
            else_dest: b,
        };
        f.block_mut(a).term = Terminator::Unwind;
        f.block_mut(b).term = Terminator::Ret(Operand::Int(0));
        let before = f.clone();
        run(&mut f);
        assert_eq!(f, before);
    }
}

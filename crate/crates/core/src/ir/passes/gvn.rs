//! Global value numbering over the dominator tree, with redundant-load
//! elimination and store-to-load forwarding.
//!
//! Pure instructions are numbered by (opcode, operands); an instruction equal
//! to one in a dominating block is replaced by it. Memory facts (the known
//! content of each slot) flow from a block to a dominator-tree child only
//! when that child's single predecessor is the block itself. Without alias
//! information any store, call or depth update forgets every fact except the
//! stored one.

use std::collections::HashMap;

use super::{apply_replacements, dead_code_elimination, remove_unread_slots, resolve, AliasInfo};
use crate::ir::{BinaryOp, BlockId, Cfg, Function, InstKind, Operand, SlotId};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Binary(BinaryOp, Operand, Operand),
    FNeg(Operand),
    ICmpEq(Operand, Operand),
    Select(Operand, Operand, Operand),
    SIToFP(Operand),
}

fn key_of(kind: &InstKind) -> Option<Key> {
    Some(match *kind {
        InstKind::Binary { op, lhs, rhs } => {
            let (a, b) = if op.is_commutative() && order(rhs) < order(lhs) {
                (rhs, lhs)
            } else {
                (lhs, rhs)
            };
            Key::Binary(op, a, b)
        }
        InstKind::FNeg(a) => Key::FNeg(a),
        InstKind::ICmpEq(a, b) => {
            let (a, b) = if order(b) < order(a) { (b, a) } else { (a, b) };
            Key::ICmpEq(a, b)
        }
        InstKind::Select {
            cond,
            if_true,
            if_false,
        } => Key::Select(cond, if_true, if_false),
        InstKind::SIToFP(a) => Key::SIToFP(a),
        _ => return None,
    })
}

/// Total order used to canonicalize commutative operands.
fn order(op: Operand) -> (u8, u64) {
    match op {
        Operand::Value(v) => (0, v.0 as u64),
        Operand::Int(i) => (1, i as u64),
        Operand::Float(b) => (2, b),
        Operand::Bool(b) => (3, b as u64),
    }
}

pub(super) fn run(f: &mut Function, aa: Option<&AliasInfo>) {
    let cfg = Cfg::compute(f);
    let children = cfg.dom_children();
    let mut map: Vec<Option<Operand>> = vec![None; f.value_types.len()];
    let mut table: HashMap<Key, Operand> = HashMap::new();
    let mut memory_at_end: HashMap<BlockId, HashMap<SlotId, Operand>> = HashMap::new();

    // Iterative dominator-tree walk; scoped entries are undone on exit.
    enum Visit {
        Enter(BlockId),
        Exit(Vec<Key>),
    }
    let mut stack = vec![Visit::Enter(f.entry())];
    while let Some(visit) = stack.pop() {
        let b = match visit {
            Visit::Exit(keys) => {
                for k in keys {
                    table.remove(&k);
                }
                continue;
            }
            Visit::Enter(b) => b,
        };
        let mut memory = match cfg.idom(b) {
            Some(d) if cfg.preds(b) == [d] => memory_at_end.get(&d).cloned().unwrap_or_default(),
            _ => HashMap::new(),
        };
        let mut added = Vec::new();
        let insts = f.blocks[b.index()].insts.clone();
        for i in insts {
            let inst = &mut f.insts[i.index()];
            for op in inst.kind.operands_mut() {
                *op = resolve(&map, *op);
            }
            match inst.kind {
                InstKind::Load(slot) => {
                    let r = inst.result.expect("load yields a value");
                    match memory.get(&slot) {
                        Some(&known) => map[r.index()] = Some(known),
                        None => {
                            memory.insert(slot, Operand::Value(r));
                        }
                    }
                }
                InstKind::Store { slot, value } => {
                    match aa {
                        Some(info) => memory.retain(|s, _| !info.may_alias(*s, slot)),
                        None => memory.clear(),
                    }
                    memory.insert(slot, value);
                }
                InstKind::Call { .. } | InstKind::DepthEnter | InstKind::DepthLeave => {
                    if let Some(info) = aa {
                        memory.retain(|s, _| info.is_local(*s));
                    } else {
                        memory.clear();
                    }
                }
                _ => {
                    let Some(key) = key_of(&inst.kind) else { continue };
                    let r = inst.result.expect("pure instruction yields a value");
                    match table.get(&key) {
                        Some(&existing) => map[r.index()] = Some(existing),
                        None => {
                            table.insert(key.clone(), Operand::Value(r));
                            added.push(key);
                        }
                    }
                }
            }
        }
        memory_at_end.insert(b, memory);
        stack.push(Visit::Exit(added));
        for &c in children[b.index()].iter().rev() {
            stack.push(Visit::Enter(c));
        }
    }

    apply_replacements(f, &map);
    dead_code_elimination(f);
    if aa.is_some() && remove_unread_slots(f) {
        dead_code_elimination(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::type_check;
    use crate::exec::NativeRegistry;
    use crate::frontend::parse_source;
    use crate::ir::codegen_program;

    fn entry_after(src: &str, aa: bool) -> Function {
        let typed = type_check(parse_source(src).unwrap()).unwrap();
        let mut m = codegen_program(&typed, &NativeRegistry::new()).unwrap();
        let f = m.functions.last_mut().unwrap();
        let info = AliasInfo::compute(f);
        run(f, aa.then_some(&info));
        f.clone()
    }

    fn count(f: &Function, pred: impl Fn(&InstKind) -> bool) -> usize {
        f.live_insts().filter(|&(_, i)| pred(&f.inst(i).kind)).count()
    }

    #[test]
    fn forwards_stores_and_removes_slots() {
        let f = entry_after("int a = 3\nint b = a + a\nreturn b", true);
        assert_eq!(count(&f, |k| matches!(k, InstKind::Load(_))), 0);
        assert_eq!(count(&f, |k| matches!(k, InstKind::Store { .. })), 0);
        assert!(f.slots.is_empty());
    }

    #[test]
    fn merges_common_subexpressions() {
        let f = entry_after("int a = 3\nreturn (a * 7) + (7 * a)", true);
        assert_eq!(
            count(&f, |k| matches!(k, InstKind::Binary { op: BinaryOp::Mul, .. })),
            1
        );
    }

    #[test]
    fn calls_clobber_memory_without_alias_info() {
        let src = "int g() { return 1 }\nint a = 3\nint b = g()\nreturn a + b";
        let with = entry_after(src, true);
        let without = entry_after(src, false);
        assert_eq!(count(&with, |k| matches!(k, InstKind::Load(_))), 0);
        assert!(count(&without, |k| matches!(k, InstKind::Load(_))) > 0);
    }
}

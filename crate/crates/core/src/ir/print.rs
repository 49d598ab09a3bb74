//! Textual IR, loosely modelled on LLVM assembly.

use std::collections::HashMap;
use std::fmt::Write;

use super::{Callee, Function, InstKind, Module, Operand, Terminator, ValueId};

pub(super) fn print_module(module: &Module) -> String {
    let mut out = String::new();
    for (i, e) in module.externs.iter().enumerate() {
        if i == 0 {
            out.push('\n');
        }
        let params: Vec<&str> = e.params.iter().map(|t| t.name()).collect();
        let _ = writeln!(out, "declare {} @{}({})", e.ret, e.name, params.join(", "));
    }
    for f in &module.functions {
        out.push('\n');
        print_function(module, f, &mut out);
    }
    out
}

struct Names<'a> {
    f: &'a Function,
    values: HashMap<ValueId, String>,
}

impl Names<'_> {
    fn operand(&self, op: Operand) -> String {
        match op {
            Operand::Value(v) => self
                .values
                .get(&v)
                .cloned()
                .unwrap_or_else(|| format!("%undef.{}", v.0)),
            Operand::Int(i) => i.to_string(),
            Operand::Float(bits) => format_float(f64::from_bits(bits)),
            Operand::Bool(b) => b.to_string(),
        }
    }

    fn typed(&self, op: Operand) -> String {
        format!("{} {}", self.f.operand_type(op), self.operand(op))
    }
}

fn format_float(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e16 {
        format!("{v:.1}")
    } else if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("0x{:016X}", v.to_bits())
    }
}

fn print_function(module: &Module, f: &Function, out: &mut String) {
    let mut values = HashMap::new();
    let mut next = 0u32;
    for &p in &f.params {
        let name = f.value_names[p.index()].clone().unwrap_or_else(|| {
            next += 1;
            (next - 1).to_string()
        });
        values.insert(p, format!("%{name}"));
    }
    for (_, i) in f.live_insts() {
        if let Some(r) = f.inst(i).result {
            values.insert(r, format!("%{next}"));
            next += 1;
        }
    }
    let names = Names { f, values };

    let params: Vec<String> = f.params.iter().map(|&p| names.typed(Operand::Value(p))).collect();
    let _ = writeln!(out, "define {} @{}({}) {{", f.ret, f.name, params.join(", "));
    for (bi, &b) in f.layout.iter().enumerate() {
        let block = f.block(b);
        if bi > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{}:", block.label);
        if bi == 0 {
            for s in &f.slots {
                let _ = writeln!(out, "  %{}.addr = alloca {}", s.name, s.ty);
            }
        }
        for &i in &block.insts {
            let inst = f.inst(i);
            out.push_str("  ");
            if let Some(r) = inst.result {
                let _ = write!(out, "{} = ", names.operand(Operand::Value(r)));
            }
            let text = match &inst.kind {
                InstKind::Binary { op, lhs, rhs } => format!(
                    "{} {} {}, {}",
                    op.mnemonic(),
                    op.operand_type(),
                    names.operand(*lhs),
                    names.operand(*rhs)
                ),
                InstKind::FNeg(a) => format!("fneg {}", names.typed(*a)),
                InstKind::ICmpEq(a, b) => format!("icmp eq {}, {}", names.typed(*a), names.operand(*b)),
                InstKind::Select {
                    cond,
                    if_true,
                    if_false,
                } => format!(
                    "select {}, {}, {}",
                    names.typed(*cond),
                    names.typed(*if_true),
                    names.typed(*if_false)
                ),
                InstKind::SIToFP(a) => format!("sitofp {} to double", names.typed(*a)),
                InstKind::Load(s) => {
                    let slot = &f.slots[s.index()];
                    format!("load {}, ptr %{}.addr", slot.ty, slot.name)
                }
                InstKind::Store { slot, value } => {
                    format!(
                        "store {}, ptr %{}.addr",
                        names.typed(*value),
                        f.slots[slot.index()].name
                    )
                }
                InstKind::Call { callee, args } => {
                    let ret = module.callee_signature(*callee).1;
                    let args: Vec<String> = args.iter().map(|a| names.typed(*a)).collect();
                    let prefix = match callee {
                        Callee::Func(_) => "call",
                        Callee::Extern(_) => "call extern",
                    };
                    format!("{prefix} {ret} @{}({})", module.callee_name(*callee), args.join(", "))
                }
                InstKind::DepthEnter => "depth.enter".to_string(),
                InstKind::DepthLeave => "depth.leave".to_string(),
            };
            out.push_str(&text);
            out.push('\n');
        }
        let label = |b: super::BlockId| format!("%{}", f.block(b).label);
        let term = match &block.term {
            Terminator::Ret(v) => format!("ret {}", names.typed(*v)),
            Terminator::Br(b) => format!("br label {}", label(*b)),
            Terminator::CondBr {
                cond,
                then_dest,
                else_dest,
            } => format!(
                "br {}, label {}, label {}",
                names.typed(*cond),
                label(*then_dest),
                label(*else_dest)
            ),
            Terminator::Unwind => "unwind".to_string(),
        };
        let _ = writeln!(out, "  {term}");
    }
    out.push_str("}\n");
}

//! The optimization pipeline: alias analysis, instruction combining,
//! reassociation, global value numbering and CFG simplification.

mod aa;
mod gvn;
mod instcombine;
mod reassociate;
mod simplifycfg;

use std::fmt;
use std::str::FromStr;

use super::{verify_module, Function, InstKind, Module, Operand};
use crate::exec::ExecError;

pub use aa::AliasInfo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pass {
    BasicAa,
    InstCombine,
    Reassociate,
    Gvn,
    SimplifyCfg,
}

impl Pass {
    /// Pipeline order.
    pub const ALL: [Pass; 5] = [
        Pass::BasicAa,
        Pass::InstCombine,
        Pass::Reassociate,
        Pass::Gvn,
        Pass::SimplifyCfg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pass::BasicAa => "basic-aa",
            Pass::InstCombine => "instcombine",
            Pass::Reassociate => "reassociate",
            Pass::Gvn => "gvn",
            Pass::SimplifyCfg => "simplifycfg",
        }
    }

    /// How this backend realizes the pass, for report metadata.
    pub fn implementation(self) -> &'static str {
        match self {
            Pass::BasicAa => "slot-based alias analysis (stack slots never escape)",
            Pass::InstCombine => "constant folding, exact algebraic identities, dead-store and dead-code removal",
            Pass::Reassociate => "integer add/mul trees only; floating point is never reordered",
            Pass::Gvn => "dominator-scoped value numbering with store-to-load forwarding",
            Pass::SimplifyCfg => "constant branch folding, unreachable-block removal, block merging",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Pass::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| format!("unknown pass `{s}`"))
    }
}

/// A subset of the five passes; they always run in [`Pass::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PassSelection {
    bits: u8,
}

impl PassSelection {
    pub fn all() -> Self {
        Pass::ALL.into_iter().collect()
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, pass: Pass) -> Self {
        self.bits |= pass.bit();
        self
    }

    pub fn without(mut self, pass: Pass) -> Self {
        self.bits &= !pass.bit();
        self
    }

    pub fn contains(self, pass: Pass) -> bool {
        self.bits & pass.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn enabled(self) -> impl Iterator<Item = Pass> {
        Pass::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl FromIterator<Pass> for PassSelection {
    fn from_iter<I: IntoIterator<Item = Pass>>(iter: I) -> Self {
        iter.into_iter().fold(Self::none(), Self::with)
    }
}

/// Runs the selected passes over every function and re-verifies the result.
/// An empty selection returns the module untouched.
pub fn optimize(mut module: Module, passes: &PassSelection) -> Result<Module, ExecError> {
    if passes.is_empty() {
        return Ok(module);
    }
    for f in &mut module.functions {
        let mut aa: Option<AliasInfo> = None;
        for pass in passes.enabled() {
            match pass {
                Pass::BasicAa => aa = Some(AliasInfo::compute(f)),
                Pass::InstCombine => instcombine::run(f),
                Pass::Reassociate => reassociate::run(f),
                Pass::Gvn => gvn::run(f, aa.as_ref()),
                Pass::SimplifyCfg => simplifycfg::run(f),
            }
        }
    }
    verify_module(&module).map_err(|e| ExecError::Optimize(e.to_string()))?;
    Ok(module)
}

/// Replaces every use of a value according to `map`, following chains.
pub(super) fn resolve(map: &[Option<Operand>], mut op: Operand) -> Operand {
    while let Operand::Value(v) = op {
        match map[v.index()] {
            Some(next) => op = next,
            None => break,
        }
    }
    op
}

pub(super) fn apply_replacements(f: &mut Function, map: &[Option<Operand>]) {
    f.map_operands(|op| resolve(map, op));
}

/// Removes unused pure instructions until none remain.
pub(super) fn dead_code_elimination(f: &mut Function) -> bool {
    let mut changed_any = false;
    loop {
        let uses = f.use_counts();
        let mut changed = false;
        for bi in 0..f.layout.len() {
            let b = f.layout[bi];
            let insts = std::mem::take(&mut f.blocks[b.index()].insts);
            let kept: Vec<_> = insts
                .into_iter()
                .filter(|&i| {
                    let inst = &f.insts[i.index()];
                    let dead = inst.kind.is_pure() && inst.result.is_some_and(|r| uses[r.index()] == 0);
                    changed |= dead;
                    !dead
                })
                .collect();
            f.blocks[b.index()].insts = kept;
        }
        if !changed {
            return changed_any;
        }
        changed_any = true;
    }
}

/// Deletes stores to slots that are never loaded, then the slots themselves.
pub(super) fn remove_unread_slots(f: &mut Function) -> bool {
    let mut read = vec![false; f.slots.len()];
    for (_, i) in f.live_insts() {
        if let InstKind::Load(s) = f.inst(i).kind {
            read[s.index()] = true;
        }
    }
    if read.iter().all(|&r| r) {
        return false;
    }
    for bi in 0..f.layout.len() {
        let b = f.layout[bi];
        let insts = std::mem::take(&mut f.blocks[b.index()].insts);
        f.blocks[b.index()].insts = insts
            .into_iter()
            .filter(|&i| !matches!(f.insts[i.index()].kind, InstKind::Store { slot, .. } if !read[slot.index()]))
            .collect();
    }
    // Renumber the remaining slots.
    let mut remap = vec![None; f.slots.len()];
    let old = std::mem::take(&mut f.slots);
    for (i, slot) in old.into_iter().enumerate() {
        if read[i] {
            remap[i] = Some(super::SlotId(f.slots.len() as u32));
            f.slots.push(slot);
        }
    }
    let live: Vec<_> = f.live_insts().map(|(_, i)| i).collect();
    for i in live {
        match &mut f.insts[i.index()].kind {
            InstKind::Load(s) | InstKind::Store { slot: s, .. } => {
                if let Some(n) = remap[s.index()] {
                    *s = n;
                }
            }
            _ => {}
        }
    }
    true
}

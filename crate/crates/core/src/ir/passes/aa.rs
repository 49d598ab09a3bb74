//! Alias analysis over stack slots.
//!
//! Slots are only addressed by loads and stores naming them directly, so two
//! distinct slots never alias and no call can reach them. Passes consult the
//! result to keep memory facts alive across calls and unrelated stores.

use crate::ir::{Function, SlotId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasInfo {
    /// Per slot: true when no instruction can observe or modify it except
    /// loads and stores naming it.
    non_escaping: Vec<bool>,
}

impl AliasInfo {
    pub fn compute(f: &Function) -> AliasInfo {
        // The IR has no address-of operation, so every slot qualifies.
        AliasInfo {
            non_escaping: vec![true; f.slots.len()],
        }
    }

    pub fn may_alias(&self, a: SlotId, b: SlotId) -> bool {
        a == b || !self.is_local(a) || !self.is_local(b)
    }

    /// True when calls and depth bookkeeping cannot touch `slot`.
    pub fn is_local(&self, slot: SlotId) -> bool {
        self.non_escaping.get(slot.index()).copied().unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Type;

    #[test]
    fn distinct_slots_do_not_alias() {
        let mut f = Function::new("f", &[], Type::I64);
        let a = f.add_slot("a", Type::I64);
        let b = f.add_slot("b", Type::F64);
        let info = AliasInfo::compute(&f);
        assert!(info.may_alias(a, a));
        assert!(!info.may_alias(a, b));
        assert!(info.is_local(b));
        assert!(!info.is_local(SlotId(7)));
    }
}

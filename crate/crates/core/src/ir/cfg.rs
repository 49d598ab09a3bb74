//! Control-flow graph queries: predecessors, reverse post-order and dominators.

use super::{BlockId, Function};

/// Control-flow facts for one function, valid until its blocks change.
#[derive(Debug, Clone)]
pub struct Cfg {
    /// Predecessors per block index (only reachable predecessors).
    preds: Vec<Vec<BlockId>>,
    /// Reachable blocks in reverse post-order, entry first.
    rpo: Vec<BlockId>,
    rpo_index: Vec<Option<usize>>,
    /// Immediate dominator per block index; the entry maps to itself.
    idom: Vec<Option<BlockId>>,
}

impl Cfg {
    pub fn compute(f: &Function) -> Cfg {
        let n = f.blocks.len();
        let entry = f.entry();

        let mut post = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut stack: Vec<(BlockId, usize)> = vec![(entry, 0)];
        seen[entry.index()] = true;
        while let Some((b, next)) = stack.pop() {
            let succs = f.block(b).term.successors();
            if next < succs.len() {
                stack.push((b, next + 1));
                let s = succs[next];
                if !seen[s.index()] {
                    seen[s.index()] = true;
                    stack.push((s, 0));
                }
            } else {
                post.push(b);
            }
        }
        let rpo: Vec<BlockId> = post.into_iter().rev().collect();
        let mut rpo_index = vec![None; n];
        for (i, b) in rpo.iter().enumerate() {
            rpo_index[b.index()] = Some(i);
        }

        let mut preds = vec![Vec::new(); n];
        for &b in &rpo {
            for s in f.block(b).term.successors() {
                if !preds[s.index()].contains(&b) {
                    preds[s.index()].push(b);
                }
            }
        }

        let mut idom: Vec<Option<BlockId>> = vec![None; n];
        idom[entry.index()] = Some(entry);
        let mut changed = true;
        while changed {
            changed = false;
            for &b in rpo.iter().skip(1) {
                let mut new_idom: Option<BlockId> = None;
                for &p in &preds[b.index()] {
                    if idom[p.index()].is_none() {
                        continue;
                    }
                    new_idom = Some(match new_idom {
                        None => p,
                        Some(cur) => intersect(&idom, &rpo_index, p, cur),
                    });
                }
                if new_idom.is_some() && idom[b.index()] != new_idom {
                    idom[b.index()] = new_idom;
                    changed = true;
                }
            }
        }

        Cfg {
            preds,
            rpo,
            rpo_index,
            idom,
        }
    }

    pub fn preds(&self, b: BlockId) -> &[BlockId] {
        &self.preds[b.index()]
    }

    pub fn rpo(&self) -> &[BlockId] {
        &self.rpo
    }

    pub fn is_reachable(&self, b: BlockId) -> bool {
        self.rpo_index[b.index()].is_some()
    }

    /// Immediate dominator, `None` for the entry and for unreachable blocks.
    pub fn idom(&self, b: BlockId) -> Option<BlockId> {
        match self.idom[b.index()] {
            Some(d) if d != b => Some(d),
            _ => None,
        }
    }

    /// True when `a` dominates `b` (reflexive). Unreachable blocks dominate nothing.
    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        if !self.is_reachable(a) || !self.is_reachable(b) {
            return false;
        }
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.idom(cur) {
                Some(d) => cur = d,
                None => return false,
            }
        }
    }

    /// Children of each block in the dominator tree, in reverse post-order.
    pub fn dom_children(&self) -> Vec<Vec<BlockId>> {
        let mut children = vec![Vec::new(); self.idom.len()];
        for &b in &self.rpo {
            if let Some(d) = self.idom(b) {
                children[d.index()].push(b);
            }
        }
        children
    }
}

fn intersect(idom: &[Option<BlockId>], rpo_index: &[Option<usize>], mut a: BlockId, mut b: BlockId) -> BlockId {
    let order = |x: BlockId| rpo_index[x.index()].expect("reachable");
    while a != b {
        while order(a) > order(b) {
            a = idom[a.index()].expect("processed");
        }
        while order(b) > order(a) {
            b = idom[b.index()].expect("processed");
        }
    }
    a
}

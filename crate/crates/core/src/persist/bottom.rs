use super::node::StNode;
use crate::error::{Error, Result};
use crate::memory::{MemoryHandle, TrackedVec};
use crate::tree::TreeStore;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BottomNode {
    pub node: StNode,
    pub degree: u8,
    pub children: [u32; 3],
}

/// A closed space-time tree packed into consecutive slots in layout order.
#[derive(Debug)]
pub struct BottomTree {
    nodes: TrackedVec<BottomNode>,
    time_lo: u64,
    time_hi: u64,
}

impl BottomTree {
    /// Drops the gaps of `top`; child pointers are renumbered to packed indices.
    pub fn compress(top: &TreeStore<StNode>, mem: &MemoryHandle) -> Result<Self> {
        let cells = top.pma().cells();
        let mut index = vec![u32::MAX; cells.len()];
        let live = top.live_cells();
        for (k, &c) in live.iter().enumerate() {
            index[c] = k as u32;
        }
        let mut nodes = Vec::with_capacity(live.len());
        for &c in &live {
            let s = &cells[c];
            if s.degree as usize > 3 {
                return Err(Error::Invariant(format!("space-time node at cell {c} has {} children", s.degree)));
            }
            let mut children = [u32::MAX; 3];
            for r in 0..s.degree as usize {
                children[r] = index[s.children[r] as usize];
            }
            nodes.push(BottomNode { node: s.payload, degree: s.degree, children });
        }
        let root = nodes.first().ok_or_else(|| Error::Invariant("empty top tree".into()))?.node;
        Ok(BottomTree { nodes: TrackedVec::from_vec(mem, nodes), time_lo: root.time_lo, time_hi: root.time_hi })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn time_range(&self) -> (u64, u64) {
        (self.time_lo, self.time_hi)
    }

    pub fn node(&self, i: usize) -> &BottomNode {
        self.nodes.get(i)
    }

    pub fn nodes(&self) -> &[BottomNode] {
        self.nodes.untracked()
    }

    /// Walks from the root to the leaf containing `(cell, version)`.
    pub fn locate(&self, cell: usize, version: u64) -> Result<StNode> {
        let mut v = self.nodes.get(0);
        if !v.node.contains(cell, version) {
            return Err(Error::Invariant(format!("bottom tree does not hold ({cell}, {version})")));
        }
        while v.degree > 0 {
            let next = v.children[..v.degree as usize]
                .iter()
                .map(|&c| self.nodes.get(c as usize))
                .find(|w| w.node.contains(cell, version))
                .ok_or_else(|| Error::Invariant(format!("children do not cover ({cell}, {version})")))?;
            v = next;
        }
        Ok(v.node)
    }
}

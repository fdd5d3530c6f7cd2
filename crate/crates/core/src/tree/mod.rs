//! Bounded-arity, uniform-depth trees stored in a packed-memory array in
//! ε-van Emde Boas order, without parent pointers.

mod build;
mod dump;
mod finger;
mod recalc;
mod validate;

pub use build::new_subtree_interval_sizes;
pub use dump::{parse_tree_dump, rows_to_explicit, TreeDumpRow};
pub use finger::{FingerId, FingerRegistry, DEFAULT_FINGER_CAPACITY};
pub use recalc::RecalcStats;
pub use validate::{ValidationReport, Violation};

use std::fmt;

use crate::error::{Error, Result};
use crate::memory::MemoryHandle;
use crate::pma::{BatchHooks, ChangeList, Change, Interval, InsertPositions, Pma, Slot, UpdateOp, MAX_ARITY, NIL};
use crate::veb::{ary_subtree_size, Eps, HTable};

use build::BuildScratch;
use recalc::{recalculate_pointers, RecalcScratch};

/// Shape parameters of a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutParams {
    pub eps: Eps,
    pub height: usize,
    pub a: usize,
    pub b: usize,
}

impl LayoutParams {
    pub fn new(eps: Eps, height: usize, a: usize, b: usize) -> Result<Self> {
        if height == 0 || height > u16::MAX as usize {
            return Err(Error::Domain(format!("height {height} out of range")));
        }
        if a < 2 || b <= a || b > MAX_ARITY {
            return Err(Error::Domain(format!("arity bounds must satisfy 2 <= a < b <= {MAX_ARITY}, got a={a}, b={b}")));
        }
        Ok(LayoutParams { eps, height, a, b })
    }
}

/// Fixed-size user data stored in every slot.
pub trait Payload: Copy + Default + fmt::Debug + PartialEq {
    fn to_bytes(&self) -> Vec<u8>;
    fn from_bytes(bytes: &[u8]) -> Option<Self>;
}

impl Payload for () {
    fn to_bytes(&self) -> Vec<u8> {
        Vec::new()
    }
    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        bytes.is_empty().then_some(())
    }
}

macro_rules! int_payload {
    ($($t:ty),*) => {$(
        impl Payload for $t {
            fn to_bytes(&self) -> Vec<u8> {
                self.to_be_bytes().to_vec()
            }
            fn from_bytes(bytes: &[u8]) -> Option<Self> {
                Some(<$t>::from_be_bytes(bytes.try_into().ok()?))
            }
        }
    )*};
}
int_payload!(u8, u16, u32, u64, i64);

macro_rules! array_payload {
    ($($n:literal),*) => {$(
        impl Payload for [u8; $n] {
            fn to_bytes(&self) -> Vec<u8> {
                self.to_vec()
            }
            fn from_bytes(bytes: &[u8]) -> Option<Self> {
                bytes.try_into().ok()
            }
        }
    )*};
}
array_payload!(4, 8, 16, 32);

/// Hooks used by every batch the store issues.
struct StoreHooks<'a> {
    root: &'a mut usize,
    pins: &'a mut [usize],
    fingers: &'a mut FingerRegistry,
    scratch: &'a mut RecalcScratch,
    stats: &'a mut RecalcStats,
}

impl<P: Copy + Default> BatchHooks<P> for StoreHooks<'_> {
    fn recalc(&mut self, pma: &Pma<P>, interval: &Interval, changes: &mut ChangeList) -> Result<()> {
        recalculate_pointers(pma, *self.root, interval, changes, self.scratch, self.stats)
    }

    fn relocated(&mut self, pma: &Pma<P>) {
        let map = |x: usize| match x {
            x if x == NIL as usize || x >= pma.size() => x,
            x => match pma.slot(x).relocation {
                NIL => x,
                r => r as usize,
            },
        };
        *self.root = map(*self.root);
        for p in self.pins.iter_mut() {
            *p = map(*p);
        }
        self.fingers.remap(map);
    }
}

/// The tree store.
#[derive(Debug)]
pub struct TreeStore<P> {
    pma: Pma<P>,
    params: LayoutParams,
    h: HTable,
    root: usize,
    fingers: FingerRegistry,
    recalc_scratch: RecalcScratch,
    build_scratch: BuildScratch,
    recalc_stats: RecalcStats,
    mem: MemoryHandle,
}

impl<P: Payload> TreeStore<P> {
    /// Complete `a`-ary tree of height `params.height`.
    pub fn init(params: LayoutParams, mem: &MemoryHandle) -> Result<Self> {
        let h = HTable::build(params.height, params.eps)?;
        let mut store = TreeStore {
            pma: Pma::new(mem),
            params,
            h,
            root: NIL as usize,
            fingers: FingerRegistry::new(DEFAULT_FINGER_CAPACITY),
            recalc_scratch: RecalcScratch::new(mem, params.height),
            build_scratch: BuildScratch::new(mem, params.height),
            recalc_stats: RecalcStats::default(),
            mem: mem.clone(),
        };
        let sizes = store.new_subtree_interval_sizes(0)?;
        let m = store.run_batch(&[UpdateOp::Insert { after: None, count: sizes[0] }], &mut [])?;
        store.root = build::build_subtree(&mut store.pma, &store.params, &store.h, &mut store.build_scratch, 0, &m)?;
        Ok(store)
    }

    pub fn params(&self) -> LayoutParams {
        self.params
    }

    pub fn h_table(&self) -> &HTable {
        &self.h
    }

    pub fn pma(&self) -> &Pma<P> {
        &self.pma
    }

    pub fn memory(&self) -> &MemoryHandle {
        &self.mem
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.pma.live()
    }

    pub fn is_empty(&self) -> bool {
        self.pma.live() == 0
    }

    /// Cumulative DFS instrumentation of all batches so far.
    pub fn recalc_stats(&self) -> &RecalcStats {
        &self.recalc_stats
    }

    fn live_slot(&self, v: usize) -> Result<&Slot<P>> {
        let s = self.pma.checked_slot(v)?;
        if !s.occupied {
            return Err(Error::Precondition(format!("cell {v} holds no vertex")));
        }
        Ok(s)
    }

    pub fn depth(&self, v: usize) -> Result<usize> {
        Ok(self.live_slot(v)?.depth as usize)
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        Ok(self.live_slot(v)?.degree as usize)
    }

    pub fn child(&self, v: usize, rank: usize) -> Result<usize> {
        let s = self.live_slot(v)?;
        s.child(rank).ok_or(Error::Navigation { vertex: v, rank, degree: s.degree as usize })
    }

    pub fn payload(&self, v: usize) -> Result<P> {
        Ok(self.live_slot(v)?.payload)
    }

    pub fn payload_mut(&mut self, v: usize) -> Result<&mut P> {
        self.live_slot(v)?;
        Ok(&mut self.pma.slot_mut(v).payload)
    }

    pub fn new_subtree_interval_sizes(&self, d: usize) -> Result<Vec<usize>> {
        new_subtree_interval_sizes(&self.h, self.params.a, d)
    }

    fn walk_intervals(&self, mut v: usize, right: bool) -> Result<Vec<usize>> {
        let leaf = self.params.height - 1;
        let step = |v: usize| -> Result<usize> {
            let s = self.live_slot(v)?;
            if s.degree == 0 {
                return Err(Error::Height { vertex: v, depth: s.depth as usize });
            }
            Ok(s.children[if right { s.degree as usize - 1 } else { 0 }] as usize)
        };
        let mut out = Vec::new();
        loop {
            if !right {
                out.push(v);
            }
            let d = self.depth(v)?;
            for _ in 1..self.h[d] {
                v = step(v)?;
            }
            if right {
                out.push(v);
            }
            if self.depth(v)? == leaf {
                break;
            }
            v = step(v)?;
        }
        Ok(out)
    }

    /// First cell of each memory interval holding the subtree of `v`.
    pub fn subtree_intervals_beginnings(&self, v: usize) -> Result<Vec<usize>> {
        self.walk_intervals(v, false)
    }

    /// Last cell of each memory interval holding the subtree of `v`.
    pub fn subtree_intervals_ends(&self, v: usize) -> Result<Vec<usize>> {
        self.walk_intervals(v, true)
    }

    fn run_batch(&mut self, ops: &[UpdateOp], pins: &mut [usize]) -> Result<InsertPositions> {
        let mut hooks = StoreHooks {
            root: &mut self.root,
            pins,
            fingers: &mut self.fingers,
            scratch: &mut self.recalc_scratch,
            stats: &mut self.recalc_stats,
        };
        self.pma.batch_update(ops, &mut hooks)
    }

    /// Inserts a complete `a`-ary subtree as the `c`-th child of `v`; returns its root.
    pub fn insert_subtree(&mut self, v: usize, c: usize) -> Result<usize> {
        let s = *self.live_slot(v)?;
        let d = s.depth as usize;
        let degree = s.degree as usize;
        if d + 1 >= self.params.height {
            return Err(Error::Height { vertex: v, depth: d });
        }
        if degree >= self.params.b {
            return Err(Error::Degree { vertex: v, degree: degree + 1, min: self.params.a, max: self.params.b });
        }
        if c > degree {
            return Err(Error::Navigation { vertex: v, rank: c, degree });
        }
        let anchors = if c > 0 {
            self.subtree_intervals_ends(s.children[c - 1] as usize)?
        } else {
            self.subtree_intervals_beginnings(s.children[0] as usize)?
                .into_iter()
                .map(|w| self.pma.prev_occupied(w).ok_or_else(|| Error::Invariant(format!("nothing precedes cell {w}"))))
                .collect::<Result<Vec<_>>>()?
        };
        let sizes = self.new_subtree_interval_sizes(d + 1)?;
        if anchors.len() != sizes.len() {
            return Err(Error::Invariant(format!("{} anchors for {} intervals", anchors.len(), sizes.len())));
        }
        let ops: Vec<UpdateOp> =
            anchors.iter().zip(&sizes).map(|(&after, &count)| UpdateOp::Insert { after: Some(after), count }).collect();
        let mut pins = [v];
        let m = self.run_batch(&ops, &mut pins)?;
        let w = build::build_subtree(&mut self.pma, &self.params, &self.h, &mut self.build_scratch, d + 1, &m)?;
        let slot = self.pma.slot_mut(pins[0]);
        slot.children.copy_within(c..degree, c + 1);
        slot.children[c] = w as u32;
        slot.degree += 1;
        Ok(w)
    }

    /// Removes the subtree rooted at the `c`-th child of `v`.
    pub fn remove_subtree(&mut self, v: usize, c: usize) -> Result<()> {
        let s = *self.live_slot(v)?;
        let degree = s.degree as usize;
        if degree == 0 {
            return Err(Error::Height { vertex: v, depth: s.depth as usize });
        }
        if degree <= self.params.a {
            return Err(Error::Degree { vertex: v, degree: degree - 1, min: self.params.a, max: self.params.b });
        }
        if c >= degree {
            return Err(Error::Navigation { vertex: v, rank: c, degree });
        }
        let w = s.children[c] as usize;
        let begins = self.subtree_intervals_beginnings(w)?;
        let ends = self.subtree_intervals_ends(w)?;
        let ops: Vec<UpdateOp> =
            begins.iter().zip(&ends).map(|(&first, &last)| UpdateOp::Remove { first, last }).collect();

        let detached = self.fingers.detach_through(w);
        {
            let slot = self.pma.slot_mut(v);
            slot.children.copy_within(c + 1..degree, c);
            slot.children[degree - 1] = NIL;
            slot.degree -= 1;
        }
        if let Err(e) = self.run_batch(&ops, &mut []) {
            let slot = self.pma.slot_mut(v);
            slot.children.copy_within(c..degree - 1, c + 1);
            slot.children[c] = w as u32;
            slot.degree += 1;
            self.fingers.restore(detached);
            return Err(e);
        }
        Ok(())
    }

    /// Cells from the root along `ranks`.
    pub fn search_path(&self, ranks: &[usize]) -> Result<Vec<usize>> {
        let mut path = Vec::with_capacity(ranks.len() + 1);
        let mut v = self.root;
        path.push(v);
        for &r in ranks {
            v = self.child(v, r)?;
            path.push(v);
        }
        Ok(path)
    }

    /// Follows `ranks` from the root and registers a finger at the vertex reached.
    pub fn descend(&mut self, ranks: &[usize]) -> Result<FingerId> {
        let path = self.search_path(ranks)?;
        self.fingers.register(path)
    }

    pub fn register_finger(&mut self, path: Vec<usize>) -> Result<FingerId> {
        self.fingers.register(path)
    }

    pub fn finger_path(&self, id: FingerId) -> Result<&[usize]> {
        self.fingers.path(id)
    }

    pub fn finger_vertex(&self, id: FingerId) -> Result<usize> {
        self.fingers.path(id).map(|p| *p.last().expect("finger paths start at the root"))
    }

    pub fn set_finger_path(&mut self, id: FingerId, path: Vec<usize>) -> Result<()> {
        self.fingers.set_path(id, path)
    }

    pub fn release_finger(&mut self, id: FingerId) -> Result<()> {
        self.fingers.release(id)
    }

    /// Runs the pointer-recalculating DFS over `first..=last` with every vertex
    /// relocated onto itself, returning the change list it would produce.
    pub fn dry_recalculate(&mut self, first: usize, last: usize, log: bool) -> Result<(Vec<Change>, RecalcStats)> {
        if first > last || last >= self.pma.size() {
            return Err(Error::OutOfBounds { arena: 0, index: last, len: self.pma.size() });
        }
        let members: Vec<usize> = (first..=last).filter(|&i| self.pma.cells()[i].occupied).collect();
        for &i in &members {
            self.pma.slot_mut(i).relocation = i as u32;
        }
        let mut changes = ChangeList::with_capacity(&self.mem, members.len().max(1));
        let mut stats = if log { RecalcStats::with_log() } else { RecalcStats::default() };
        let iv = Interval { first, last, count: members.len() };
        let r = recalculate_pointers(&self.pma, self.root, &iv, &mut changes, &mut self.recalc_scratch, &mut stats);
        for &i in &members {
            self.pma.slot_mut(i).relocation = NIL;
        }
        r.map(|()| (changes.to_vec(), stats))
    }

    /// Vertex count of a complete subtree hanging at depth `d`.
    pub fn complete_subtree_size(&self, d: usize) -> Result<usize> {
        ary_subtree_size(self.params.a, self.params.height - d)
    }

    /// Test hook: overwrite a child pointer without any checks.
    #[doc(hidden)]
    pub fn corrupt_child(&mut self, v: usize, rank: usize, target: u32) {
        self.pma.slot_mut(v).children[rank] = target;
    }

    /// Occupied cells in order.
    pub fn live_cells(&self) -> Vec<usize> {
        self.pma.occupied().collect()
    }
}

#[cfg(test)]
mod tests;

//! Partially persistent array: every write creates a version, and any past
//! version stays readable.

mod bottom;
mod io;
mod node;

pub use bottom::{BottomNode, BottomTree};
pub use io::{parse_log, parse_snapshot, SnapshotRow};
pub use node::{StNode, OPEN};

use crate::error::{Error, Result};
use crate::memory::{MemoryHandle, TrackedVec};
use crate::tree::{FingerId, LayoutParams, TreeStore};
use crate::veb::Eps;

/// Event counts of one array.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersistCounters {
    pub writes: u64,
    /// Third children gained, indexed by the height of the inserted subtree
    /// (a single leaf has height 1).
    pub gains_by_height: Vec<u64>,
    pub rollovers: u64,
    pub doublings: u64,
}

/// Current space-time tree plus the fingers kept into it.
#[derive(Debug)]
struct TopTree {
    store: TreeStore<StNode>,
    read: FingerId,
    write: FingerId,
    points: usize,
}

#[derive(Debug)]
pub struct PersistentArray {
    capacity: usize,
    eps: Eps,
    present: TrackedVec<i64>,
    top: TopTree,
    bottoms: Vec<BottomTree>,
    log: Vec<(usize, i64)>,
    counters: PersistCounters,
    mem: MemoryHandle,
}

fn check_capacity(u: usize) -> Result<()> {
    if u < 2 || !u.is_power_of_two() {
        return Err(Error::Domain(format!("capacity must be a power of two >= 2, got {u}")));
    }
    Ok(())
}

impl PersistentArray {
    pub fn new(capacity: usize) -> Result<Self> {
        Self::with_memory(capacity, Eps::HALF, &MemoryHandle::untracked())
    }

    pub fn with_memory(capacity: usize, eps: Eps, mem: &MemoryHandle) -> Result<Self> {
        check_capacity(capacity)?;
        let present = TrackedVec::filled(mem, capacity, 0i64);
        let top = Self::fresh_top(capacity, eps, 0, present.untracked(), mem)?;
        Ok(PersistentArray {
            capacity,
            eps,
            present,
            top,
            bottoms: Vec::new(),
            log: Vec::new(),
            counters: PersistCounters { gains_by_height: vec![0; tree_height(capacity)], ..Default::default() },
            mem: mem.clone(),
        })
    }

    /// Replays `writes` into an empty array of capacity `capacity`.
    pub fn from_log(capacity: usize, writes: &[(usize, i64)]) -> Result<Self> {
        let mut pa = Self::new(capacity)?;
        for &(i, x) in writes {
            pa.write(i, x)?;
        }
        Ok(pa)
    }

    /// Complete binary space-time tree over all cells, starting at `time_lo`.
    fn fresh_top(capacity: usize, eps: Eps, time_lo: u64, values: &[i64], mem: &MemoryHandle) -> Result<TopTree> {
        let params = LayoutParams::new(eps, tree_height(capacity), 2, 3)?;
        let mut store = TreeStore::init(params, mem)?;
        let root = store.root();
        init_rectangles(&mut store, root, 0, capacity - 1, time_lo, values)?;
        let read = store.descend(&[])?;
        let write = store.descend(&[])?;
        Ok(TopTree { store, read, write, points: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of writes so far; versions `0..=version_count()` are readable.
    pub fn version_count(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn counters(&self) -> &PersistCounters {
        &self.counters
    }

    pub fn log(&self) -> &[(usize, i64)] {
        &self.log
    }

    pub fn top_tree(&self) -> &TreeStore<StNode> {
        &self.top.store
    }

    pub fn bottom_trees(&self) -> &[BottomTree] {
        &self.bottoms
    }

    pub fn memory(&self) -> &MemoryHandle {
        &self.mem
    }

    /// Slots allocated for space-time trees: the top tree's whole array plus
    /// every packed bottom tree.
    pub fn total_slots(&self) -> usize {
        self.top.store.pma().size() + self.bottoms.iter().map(BottomTree::len).sum::<usize>()
    }

    /// Space-time nodes actually present.
    pub fn live_nodes(&self) -> usize {
        self.top.store.len() + self.bottoms.iter().map(BottomTree::len).sum::<usize>()
    }

    pub fn read_present(&self, i: usize) -> Result<i64> {
        if i >= self.capacity {
            return Err(Error::OutOfBounds { arena: usize::MAX, index: i, len: self.capacity });
        }
        Ok(*self.present.get(i))
    }

    pub fn read_persistent(&mut self, i: usize, version: u64) -> Result<i64> {
        if version > self.version_count() {
            return Err(Error::FutureVersion { requested: version, latest: self.version_count() });
        }
        if i >= self.capacity {
            return Err(Error::OutOfBounds { arena: usize::MAX, index: i, len: self.capacity });
        }
        let top_lo = self.top.store.payload(self.top.store.root())?.time_lo;
        if version >= top_lo {
            let leaf = self.seek(self.top.read, i, version)?;
            return Ok(self.top.store.payload(leaf)?.value_at(version));
        }
        let k = self.bottoms.partition_point(|t| t.time_range().1 <= version);
        let tree = self.bottoms.get(k).ok_or_else(|| Error::Invariant(format!("no tree holds version {version}")))?;
        Ok(tree.locate(i, version)?.value_at(version))
    }

    /// Moves `finger` to the leaf holding `(i, version)`: up until the
    /// rectangle encloses the target, then down.
    fn seek(&mut self, finger: FingerId, i: usize, version: u64) -> Result<usize> {
        let store = &mut self.top.store;
        let mut path = store.finger_path(finger)?.to_vec();
        while path.len() > 1 && !store.payload(*path.last().unwrap())?.contains(i, version) {
            path.pop();
        }
        let mut v = *path.last().unwrap();
        if !store.payload(v)?.contains(i, version) {
            return Err(Error::Invariant(format!("top tree does not hold ({i}, {version})")));
        }
        while store.degree(v)? > 0 {
            let mut next = None;
            for r in 0..store.degree(v)? {
                let w = store.child(v, r)?;
                if store.payload(w)?.contains(i, version) {
                    next = Some(w);
                    break;
                }
            }
            v = next.ok_or_else(|| Error::Invariant(format!("children of cell {v} do not cover ({i}, {version})")))?;
            path.push(v);
        }
        store.set_finger_path(finger, path)?;
        Ok(v)
    }

    /// Writes `value` into cell `i`, creating a new version, which is returned.
    pub fn write(&mut self, i: usize, value: i64) -> Result<u64> {
        while i >= self.capacity {
            self.double()?;
        }
        self.present.set(i, value);
        self.log.push((i, value));
        self.counters.writes += 1;
        let version = self.version_count();

        let leaf = self.seek(self.top.write, i, version)?;
        {
            let node = self.top.store.payload_mut(leaf)?;
            if node.point.is_some() || !node.is_open() {
                return Err(Error::Invariant(format!("present leaf of cell {i} is full or closed")));
            }
            node.point = Some((version, value));
            node.is_full = true;
        }
        self.top.points += 1;
        if self.top.points == self.capacity {
            self.rollover()?;
            return Ok(version);
        }
        self.expand_after(version)?;
        Ok(version)
    }

    /// Marks newly full ancestors along the write finger and expands the
    /// bottommost non-full one.
    fn expand_after(&mut self, version: u64) -> Result<()> {
        let store = &mut self.top.store;
        let path = store.finger_path(self.top.write)?.to_vec();
        let mut k = path.len() - 1;
        let x = loop {
            if k == 0 {
                return Err(Error::Invariant("root became full before the epoch ended".into()));
            }
            k -= 1;
            let x = path[k];
            let mut full = 0;
            for r in 0..store.degree(x)? {
                full += store.payload(store.child(x, r)?)?.is_full as usize;
            }
            if full < 2 {
                break x;
            }
            store.payload_mut(x)?.is_full = true;
        };
        let y = path[k + 1];
        let yn = store.payload(y)?;
        let closed_at = version + 1;
        close_open(store, y, closed_at)?;
        let height = store.params().height - store.depth(x)? - 1;
        let w = store.insert_subtree(x, 2)?;
        let values = self.present.untracked();
        init_rectangles(store, w, yn.space_lo as usize, yn.space_hi as usize, closed_at, values)?;
        self.counters.gains_by_height[height] += 1;
        Ok(())
    }

    /// Closes the top tree and packs it into a bottom tree; a fresh top tree
    /// starts from the present values.
    pub fn rollover(&mut self) -> Result<()> {
        let start = self.version_count() + 1;
        let root = self.top.store.root();
        close_open(&mut self.top.store, root, start)?;
        self.bottoms.push(BottomTree::compress(&self.top.store, &self.mem)?);
        self.top = Self::fresh_top(self.capacity, self.eps, start, self.present.untracked(), &self.mem)?;
        self.counters.rollovers += 1;
        Ok(())
    }

    /// Rebuilds everything with twice the capacity by replaying the log.
    pub fn double(&mut self) -> Result<()> {
        let mut next = PersistentArray::with_memory(self.capacity * 2, self.eps, &self.mem)?;
        for &(i, x) in &self.log {
            next.write(i, x)?;
        }
        next.counters.doublings = self.counters.doublings + 1;
        *self = next;
        Ok(())
    }

    /// Every leaf rectangle across all trees, for partition checks.
    pub fn leaf_rectangles(&self) -> Vec<StNode> {
        let mut out: Vec<StNode> =
            self.bottoms.iter().flat_map(|t| t.nodes().iter().filter(|n| n.degree == 0).map(|n| n.node)).collect();
        let cells = self.top.store.pma().cells();
        out.extend(self.top.store.live_cells().into_iter().filter(|&c| cells[c].degree == 0).map(|c| cells[c].payload));
        out
    }

    /// Open rectangles of the top tree that are full; empty between writes.
    pub fn full_open_rectangles(&self) -> Vec<StNode> {
        let cells = self.top.store.pma().cells();
        self.top.store.live_cells().into_iter().map(|c| cells[c].payload).filter(|n| n.is_open() && n.is_full).collect()
    }

    /// Values of every cell at `version`.
    pub fn snapshot(&mut self, version: u64) -> Result<Vec<i64>> {
        (0..self.capacity).map(|i| self.read_persistent(i, version)).collect()
    }
}

fn tree_height(capacity: usize) -> usize {
    capacity.trailing_zeros() as usize + 1
}

/// Sets the rectangles of the complete binary subtree at `v` over cells
/// `lo..=hi`, open from `time_lo`, with leaf boundaries from `values`.
fn init_rectangles(store: &mut TreeStore<StNode>, v: usize, lo: usize, hi: usize, time_lo: u64, values: &[i64]) -> Result<()> {
    let mut stack = vec![(v, lo, hi)];
    while let Some((v, lo, hi)) = stack.pop() {
        let mut node = StNode::open(lo, hi, time_lo);
        let degree = store.degree(v)?;
        if degree == 0 {
            if lo != hi {
                return Err(Error::Invariant(format!("leaf over cells {lo}..={hi}")));
            }
            node.boundary_value = values[lo];
        } else {
            let mid = lo + (hi - lo).div_ceil(2);
            stack.push((store.child(v, 0)?, lo, mid - 1));
            stack.push((store.child(v, 1)?, mid, hi));
        }
        *store.payload_mut(v)? = node;
    }
    Ok(())
}

/// Closes every open rectangle in the subtree of `v` at `time_hi`.
fn close_open(store: &mut TreeStore<StNode>, v: usize, time_hi: u64) -> Result<()> {
    let mut stack = vec![v];
    while let Some(v) = stack.pop() {
        let node = store.payload_mut(v)?;
        if !node.is_open() {
            continue;
        }
        node.time_hi = time_hi;
        for r in 0..store.degree(v)? {
            stack.push(store.child(v, r)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;

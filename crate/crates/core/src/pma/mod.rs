//! Packed-memory array with batched, interval-based redistribution.
//!
//! The array is split into `2^k` segments of `Θ(log |P|)` cells. Every node of
//! the implicit binary tree over segments has a density window that narrows
//! linearly from `[1/8, 1]` at the leaves to `[2/8, 7/8]` at the root.

mod batch;
mod dump;
mod plan;

pub use batch::{BatchHooks, Change, ChangeList, InsertPositions, NoRecalc};
pub use dump::{dump_cells, parse_dump, DumpRow};
pub use plan::{Interval, IntervalPlan, UpdateOp};

use crate::error::{Error, Result};
use crate::memory::{MemoryHandle, TrackedVec};

/// Marker for an absent slot index.
pub const NIL: u32 = u32::MAX;
/// Largest supported branching factor `b`.
pub const MAX_ARITY: usize = 8;

/// One cell of the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot<P> {
    pub occupied: bool,
    pub depth: u16,
    pub degree: u8,
    pub children: [u32; MAX_ARITY],
    pub relocation: u32,
    pub payload: P,
}

impl<P: Default> Default for Slot<P> {
    fn default() -> Self {
        Slot { occupied: false, depth: 0, degree: 0, children: [NIL; MAX_ARITY], relocation: NIL, payload: P::default() }
    }
}

impl<P: Default> Slot<P> {
    /// Freshly inserted, zero-initialised vertex.
    pub fn fresh() -> Self {
        Slot { occupied: true, ..Slot::default() }
    }
}

impl<P> Slot<P> {
    pub fn child(&self, rank: usize) -> Option<usize> {
        (rank < self.degree as usize).then(|| self.children[rank] as usize)
    }
}

/// Work counters, cumulative since construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PmaCounters {
    /// Cells visited while planning and computing new positions.
    pub scanned: u64,
    /// Slot copies that changed a slot's position.
    pub moved: u64,
    pub batches: u64,
    pub rebuilds: u64,
}

/// Exact density window of one virtual node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub size: usize,
    pub segment: usize,
    /// Number of levels used for interpolating thresholds (at least 1).
    pub levels: usize,
}

impl Geometry {
    pub fn for_size(size: usize) -> Self {
        let segment = segment_size(size);
        let levels = ((size / segment).trailing_zeros() as usize).max(1);
        Geometry { size, segment, levels }
    }

    pub fn segments(&self) -> usize {
        self.size / self.segment
    }

    /// Height of the segment tree's root above its leaves.
    pub fn root_height(&self) -> usize {
        self.segments().trailing_zeros() as usize
    }

    /// `n` elements in a node of `width` cells at height `j` obey `[ρ_j, τ_j]`.
    pub fn density_ok(&self, n: usize, width: usize, j: usize) -> bool {
        let l = self.levels as u128;
        let (n, w, j) = (n as u128, width as u128, j as u128);
        let lo = 8 * l * n >= w * (l + j);
        let hi = 8 * l * n <= w * (8 * l - j);
        hi && (lo || self.size == 1 && n == 0)
    }

    /// Heap index of the node at height `j` covering cell `i`.
    pub fn node_of(&self, i: usize, j: usize) -> usize {
        (self.segments() + i / self.segment) >> j
    }

    /// `(first, last, height)` of heap node `x`.
    pub fn node_range(&self, x: usize) -> (usize, usize, usize) {
        let depth = usize::BITS as usize - 1 - x.leading_zeros() as usize;
        let j = self.root_height() - depth;
        let width = self.segment << j;
        let first = (x - (1 << depth)) * width;
        (first, first + width - 1, j)
    }
}

/// Smallest power of two `≥ x` (and `≥ 1`).
pub fn hyperceil(x: usize) -> usize {
    x.max(1).next_power_of_two()
}

/// `⌈⌈log2(size + 1)⌉⌉`, computed without floating point.
pub fn segment_size(size: usize) -> usize {
    // Smallest power of two m with 2^m ≥ size + 1, i.e. m ≥ bit length of size.
    let bits = usize::BITS as usize - size.leading_zeros() as usize;
    let m = hyperceil(bits);
    m.min(size.max(1))
}

/// Number of placed elements falling into `[from, from + len)` when `n` elements
/// are spread over `cap` cells starting at `base` with positions `base + ⌊k·cap/n⌋`.
pub(crate) fn placed_in(base: usize, cap: usize, n: usize, from: usize, len: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let below = |y: usize| -> usize {
        let y = y.saturating_sub(base) as u128;
        let c = (y * n as u128).div_ceil(cap as u128);
        c.min(n as u128) as usize
    };
    below(from + len) - below(from)
}

/// The array `P`.
#[derive(Debug)]
pub struct Pma<P> {
    cells: TrackedVec<Slot<P>>,
    counts: TrackedVec<u32>,
    geometry: Geometry,
    live: usize,
    mem: MemoryHandle,
    counters: PmaCounters,
}

impl<P: Copy + Default> Pma<P> {
    /// Empty array of one blank segment.
    pub fn new(mem: &MemoryHandle) -> Self {
        Self::with_size(mem, 1)
    }

    fn with_size(mem: &MemoryHandle, size: usize) -> Self {
        let geometry = Geometry::for_size(size);
        Pma {
            cells: TrackedVec::filled(mem, size, Slot::default()),
            counts: TrackedVec::filled(mem, 2 * geometry.segments(), 0),
            geometry,
            live: 0,
            mem: mem.clone(),
            counters: PmaCounters::default(),
        }
    }

    /// Array holding `slots` in order, spread uniformly over `⌈⌈4n/3⌉⌉` cells.
    /// Child indices in `slots` are ranks into `slots` and get translated to cells.
    pub fn from_ranked(mem: &MemoryHandle, slots: &[Slot<P>]) -> Self {
        let n = slots.len();
        let size = rebuild_size(n);
        let mut pma = Self::with_size(mem, size);
        let pos = |k: usize| (k as u128 * size as u128 / n as u128) as usize;
        for (k, s) in slots.iter().enumerate() {
            let mut s = *s;
            s.occupied = true;
            s.relocation = NIL;
            for c in 0..s.degree as usize {
                s.children[c] = pos(s.children[c] as usize) as u32;
            }
            pma.cells.set(pos(k), s);
        }
        pma.live = n;
        pma.recount_all();
        pma
    }

    /// Array over exactly these cells; the length must be a power of two.
    pub fn from_layout(mem: &MemoryHandle, cells: Vec<Slot<P>>) -> Result<Self> {
        if !cells.len().is_power_of_two() {
            return Err(Error::Precondition(format!("array length {} is not a power of two", cells.len())));
        }
        let geometry = Geometry::for_size(cells.len());
        let live = cells.iter().filter(|s| s.occupied).count();
        let mut pma = Pma {
            cells: TrackedVec::from_vec(mem, cells),
            counts: TrackedVec::filled(mem, 2 * geometry.segments(), 0),
            geometry,
            live,
            mem: mem.clone(),
            counters: PmaCounters::default(),
        };
        pma.recount_all();
        Ok(pma)
    }

    pub fn memory(&self) -> &MemoryHandle {
        &self.mem
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn segment_size(&self) -> usize {
        self.geometry.segment
    }

    pub fn counters(&self) -> PmaCounters {
        self.counters
    }

    /// Tracked read of cell `i`.
    #[inline]
    pub fn slot(&self, i: usize) -> &Slot<P> {
        self.cells.get(i)
    }

    /// Tracked write access to cell `i`.
    #[inline]
    pub fn slot_mut(&mut self, i: usize) -> &mut Slot<P> {
        self.cells.get_mut(i)
    }

    /// Raw cells, bypassing the memory simulator.
    pub fn cells(&self) -> &[Slot<P>] {
        self.cells.untracked()
    }

    pub fn checked_slot(&self, i: usize) -> Result<&Slot<P>> {
        if i >= self.size() {
            return Err(Error::OutOfBounds { arena: 0, index: i, len: self.size() });
        }
        Ok(self.slot(i))
    }

    /// Occupied cell indices in order.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.untracked().iter().enumerate().filter(|(_, s)| s.occupied).map(|(i, _)| i)
    }

    /// Next occupied cell strictly after `i`.
    pub fn next_occupied(&self, i: usize) -> Option<usize> {
        (i + 1..self.size()).find(|&k| self.slot(k).occupied)
    }

    /// Last occupied cell strictly before `i`.
    pub fn prev_occupied(&self, i: usize) -> Option<usize> {
        (0..i).rev().find(|&k| self.slot(k).occupied)
    }

    fn recount_all(&mut self) {
        let g = self.geometry;
        let segs = g.segments();
        let mut counts = vec![0u32; 2 * segs];
        for (i, s) in self.cells.untracked().iter().enumerate() {
            if s.occupied {
                counts[segs + i / g.segment] += 1;
            }
        }
        for x in (1..segs).rev() {
            counts[x] = counts[2 * x] + counts[2 * x + 1];
        }
        self.counts = TrackedVec::from_vec(&self.mem, counts);
    }

    /// Every virtual node whose density is outside its window, as `(heap index, count)`.
    pub fn density_violations(&self) -> Vec<(usize, usize)> {
        let g = self.geometry;
        let segs = g.segments();
        let mut counts = vec![0usize; 2 * segs];
        for (i, s) in self.cells.untracked().iter().enumerate() {
            if s.occupied {
                counts[segs + i / g.segment] += 1;
            }
        }
        for x in (1..segs).rev() {
            counts[x] = counts[2 * x] + counts[2 * x + 1];
        }
        (1..2 * segs)
            .filter(|&x| {
                let (l, r, j) = g.node_range(x);
                !g.density_ok(counts[x], r - l + 1, j)
            })
            .map(|x| (x, counts[x]))
            .collect()
    }

    /// Checks the maintained per-node counts against the cells.
    pub fn check_counts(&self) -> Result<()> {
        let g = self.geometry;
        let segs = g.segments();
        let mut counts = vec![0u32; 2 * segs];
        for (i, s) in self.cells.untracked().iter().enumerate() {
            if s.occupied {
                counts[segs + i / g.segment] += 1;
            }
        }
        for x in (1..segs).rev() {
            counts[x] = counts[2 * x] + counts[2 * x + 1];
        }
        if counts[1..] != self.counts.untracked()[1..] {
            return Err(Error::Invariant("stale virtual-node counts".into()));
        }
        if counts[1] as usize != self.live {
            return Err(Error::Invariant(format!("live count {} but {} occupied cells", self.live, counts[1])));
        }
        Ok(())
    }
}

pub(crate) fn rebuild_size(n: usize) -> usize {
    hyperceil((4 * n).div_ceil(3))
}

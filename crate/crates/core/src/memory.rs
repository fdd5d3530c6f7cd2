//! Instrumented memory through which every slot access of the store flows.
//!
//! Arenas (the slot array, change lists, navigation stacks, ...) are mapped to
//! disjoint ranges of blocks. When tracking is enabled, every access goes
//! through an LRU cache simulator which counts block transfers.

use std::collections::HashMap;
use std::fmt;
use std::ops::Index;
use std::sync::{Arc, Mutex, MutexGuard};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMemoryConfig {
    /// Block size `B`, measured in slots.
    pub block_size_slots: usize,
    /// Cache size `M / B`, measured in blocks.
    pub cache_size_blocks: usize,
    /// Pass-through mode when false.
    pub enabled: bool,
}

impl BlockMemoryConfig {
    pub fn new(block_size_slots: usize, cache_size_blocks: usize) -> Result<Self> {
        if block_size_slots == 0 || cache_size_blocks == 0 {
            return Err(Error::Domain(format!(
                "block size ({block_size_slots}) and cache size ({cache_size_blocks}) must be positive"
            )));
        }
        Ok(BlockMemoryConfig { block_size_slots, cache_size_blocks, enabled: true })
    }

    pub fn disabled() -> Self {
        BlockMemoryConfig { block_size_slots: 1, cache_size_blocks: 1, enabled: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransferStats {
    pub transfers: u64,
    pub accesses: u64,
    pub evictions: u64,
}

impl TransferStats {
    pub fn since(&self, earlier: &TransferStats) -> TransferStats {
        TransferStats {
            transfers: self.transfers - earlier.transfers,
            accesses: self.accesses - earlier.accesses,
            evictions: self.evictions - earlier.evictions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArenaId(usize);

impl ArenaId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
struct ArenaInfo {
    first_block: u64,
    len: usize,
}

const NIL: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct LruNode {
    block: u64,
    prev: usize,
    next: usize,
}

/// Fixed-capacity LRU set of block ids with O(1) touch.
#[derive(Debug)]
struct Lru {
    capacity: usize,
    map: HashMap<u64, usize>,
    nodes: Vec<LruNode>,
    head: usize, // most recently used
    tail: usize,
    mru_block: u64,
}

impl Lru {
    fn new(capacity: usize) -> Self {
        Lru {
            capacity,
            map: HashMap::with_capacity(capacity.min(1 << 20)),
            nodes: Vec::new(),
            head: NIL,
            tail: NIL,
            mru_block: u64::MAX,
        }
    }

    fn clear(&mut self) {
        self.map.clear();
        self.nodes.clear();
        self.head = NIL;
        self.tail = NIL;
        self.mru_block = u64::MAX;
    }

    fn unlink(&mut self, idx: usize) {
        let LruNode { prev, next, .. } = self.nodes[idx];
        if prev != NIL {
            self.nodes[prev].next = next;
        } else {
            self.head = next;
        }
        if next != NIL {
            self.nodes[next].prev = prev;
        } else {
            self.tail = prev;
        }
    }

    fn push_front(&mut self, idx: usize) {
        self.nodes[idx].prev = NIL;
        self.nodes[idx].next = self.head;
        if self.head != NIL {
            self.nodes[self.head].prev = idx;
        }
        self.head = idx;
        if self.tail == NIL {
            self.tail = idx;
        }
    }

    /// Returns `(hit, evicted)`.
    fn touch(&mut self, block: u64) -> (bool, bool) {
        if block == self.mru_block {
            return (true, false);
        }
        self.mru_block = block;
        if let Some(&idx) = self.map.get(&block) {
            self.unlink(idx);
            self.push_front(idx);
            return (true, false);
        }
        if self.nodes.len() < self.capacity {
            let idx = self.nodes.len();
            self.nodes.push(LruNode { block, prev: NIL, next: NIL });
            self.map.insert(block, idx);
            self.push_front(idx);
            (false, false)
        } else {
            let idx = self.tail;
            self.unlink(idx);
            let old = self.nodes[idx].block;
            self.map.remove(&old);
            self.nodes[idx].block = block;
            self.map.insert(block, idx);
            self.push_front(idx);
            (false, true)
        }
    }
}

/// The simulated two-level memory: arenas mapped to blocks plus an LRU cache.
#[derive(Debug)]
pub struct BlockMemory {
    config: BlockMemoryConfig,
    arenas: Vec<Option<ArenaInfo>>,
    next_block: u64,
    lru: Lru,
    stats: TransferStats,
}

impl BlockMemory {
    pub fn new(config: BlockMemoryConfig) -> Self {
        BlockMemory {
            config,
            arenas: Vec::new(),
            next_block: 0,
            lru: Lru::new(config.cache_size_blocks.max(1)),
            stats: TransferStats::default(),
        }
    }

    pub fn config(&self) -> BlockMemoryConfig {
        self.config
    }

    /// Maps `length` slots onto fresh blocks never shared with another arena.
    pub fn register_arena(&mut self, length: usize) -> ArenaId {
        let length = length.max(1);
        let b = self.config.block_size_slots as u64;
        let blocks = (length as u64).div_ceil(b);
        let id = ArenaId(self.arenas.len());
        self.arenas.push(Some(ArenaInfo { first_block: self.next_block, len: length }));
        self.next_block += blocks;
        id
    }

    pub fn release_arena(&mut self, arena: ArenaId) {
        if let Some(slot) = self.arenas.get_mut(arena.0) {
            *slot = None;
        }
    }

    /// Block id touched by `index` of `arena`.
    pub fn block_of(&self, arena: ArenaId, index: usize) -> Result<u64> {
        let info = self
            .arenas
            .get(arena.0)
            .and_then(|a| a.as_ref())
            .ok_or(Error::OutOfBounds { arena: arena.0, index, len: 0 })?;
        if index >= info.len {
            return Err(Error::OutOfBounds { arena: arena.0, index, len: info.len });
        }
        Ok(info.first_block + (index / self.config.block_size_slots) as u64)
    }

    pub fn access(&mut self, arena: ArenaId, index: usize, _kind: AccessKind) -> Result<()> {
        let block = self.block_of(arena, index)?;
        if !self.config.enabled {
            return Ok(());
        }
        self.stats.accesses += 1;
        let (hit, evicted) = self.lru.touch(block);
        if !hit {
            self.stats.transfers += 1;
        }
        if evicted {
            self.stats.evictions += 1;
        }
        Ok(())
    }

    pub fn reset_stats(&mut self) {
        self.stats = TransferStats::default();
    }

    pub fn snapshot_stats(&self) -> TransferStats {
        self.stats
    }

    /// Empties the cache without touching the counters.
    pub fn flush_cache(&mut self) {
        self.lru.clear();
    }
}

/// Shared handle to a [`BlockMemory`]; `None` means untracked pass-through.
#[derive(Clone, Default)]
pub struct MemoryHandle(Option<Arc<Mutex<BlockMemory>>>);

impl fmt::Debug for MemoryHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("MemoryHandle(untracked)"),
            Some(_) => f.write_str("MemoryHandle(tracked)"),
        }
    }
}

impl MemoryHandle {
    pub fn new(config: BlockMemoryConfig) -> Self {
        if config.enabled {
            MemoryHandle(Some(Arc::new(Mutex::new(BlockMemory::new(config)))))
        } else {
            MemoryHandle(None)
        }
    }

    pub fn untracked() -> Self {
        MemoryHandle(None)
    }

    pub fn is_tracked(&self) -> bool {
        self.0.is_some()
    }

    fn lock(&self) -> Option<MutexGuard<'_, BlockMemory>> {
        self.0.as_ref().map(|m| m.lock().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn register_arena(&self, length: usize) -> Option<ArenaId> {
        self.lock().map(|mut m| m.register_arena(length))
    }

    pub fn release_arena(&self, arena: ArenaId) {
        if let Some(mut m) = self.lock() {
            m.release_arena(arena);
        }
    }

    #[inline]
    pub fn access(&self, arena: Option<ArenaId>, index: usize, kind: AccessKind) {
        if let (Some(mem), Some(arena)) = (&self.0, arena) {
            let mut m = mem.lock().unwrap_or_else(|e| e.into_inner());
            // Arena bounds are enforced by the owning container.
            let _ = m.access(arena, index, kind);
        }
    }

    pub fn reset_stats(&self) {
        if let Some(mut m) = self.lock() {
            m.reset_stats();
        }
    }

    pub fn snapshot_stats(&self) -> TransferStats {
        self.lock().map(|m| m.snapshot_stats()).unwrap_or_default()
    }

    pub fn flush_cache(&self) {
        if let Some(mut m) = self.lock() {
            m.flush_cache();
        }
    }

    pub fn config(&self) -> BlockMemoryConfig {
        self.lock().map(|m| m.config()).unwrap_or_else(BlockMemoryConfig::disabled)
    }
}

/// A fixed-length array registered as one arena; reads and writes are recorded.
pub struct TrackedVec<T> {
    data: Vec<T>,
    arena: Option<ArenaId>,
    mem: MemoryHandle,
}

impl<T: fmt::Debug> fmt::Debug for TrackedVec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrackedVec").field("len", &self.data.len()).field("arena", &self.arena).finish()
    }
}

impl<T> TrackedVec<T> {
    pub fn from_vec(mem: &MemoryHandle, data: Vec<T>) -> Self {
        let arena = mem.register_arena(data.len());
        TrackedVec { data, arena, mem: mem.clone() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &T {
        self.mem.access(self.arena, i, AccessKind::Read);
        &self.data[i]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize) -> &mut T {
        self.mem.access(self.arena, i, AccessKind::Write);
        &mut self.data[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: T) {
        self.mem.access(self.arena, i, AccessKind::Write);
        self.data[i] = value;
    }

    /// Raw view that bypasses accounting; used by validation and dumps only.
    pub fn untracked(&self) -> &[T] {
        &self.data
    }

    pub fn untracked_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn memory(&self) -> &MemoryHandle {
        &self.mem
    }
}

impl<T: Clone> TrackedVec<T> {
    pub fn filled(mem: &MemoryHandle, len: usize, value: T) -> Self {
        Self::from_vec(mem, vec![value; len])
    }
}

impl<T> Index<usize> for TrackedVec<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        self.get(i)
    }
}

impl<T> Drop for TrackedVec<T> {
    fn drop(&mut self) {
        if let Some(a) = self.arena {
            self.mem.release_arena(a);
        }
    }
}

/// Bounded stack living in its own arena.
#[derive(Debug)]
pub struct TrackedStack<T> {
    items: TrackedVec<T>,
    len: usize,
}

impl<T: Copy + Default> TrackedStack<T> {
    pub fn with_capacity(mem: &MemoryHandle, capacity: usize) -> Self {
        TrackedStack { items: TrackedVec::filled(mem, capacity.max(1), T::default()), len: 0 }
    }

    pub fn clear(&mut self) {
        self.len = 0;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, value: T) {
        assert!(self.len < self.items.len(), "tracked stack overflow (capacity {})", self.items.len());
        self.items.set(self.len, value);
        self.len += 1;
    }

    pub fn pop(&mut self) -> Option<T> {
        if self.len == 0 {
            return None;
        }
        self.len -= 1;
        Some(*self.items.get(self.len))
    }

    pub fn top(&self) -> Option<T> {
        if self.len == 0 {
            None
        } else {
            Some(*self.items.get(self.len - 1))
        }
    }

    pub fn top_mut(&mut self) -> Option<&mut T> {
        if self.len == 0 {
            None
        } else {
            Some(self.items.get_mut(self.len - 1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mem(b: usize, c: usize) -> BlockMemory {
        BlockMemory::new(BlockMemoryConfig::new(b, c).unwrap())
    }

    #[test]
    fn cold_miss_then_same_block_hit() {
        let mut m = mem(4, 8);
        let a = m.register_arena(16);
        m.access(a, 0, AccessKind::Read).unwrap();
        assert_eq!(m.snapshot_stats().transfers, 1);
        m.access(a, 3, AccessKind::Read).unwrap();
        assert_eq!(m.snapshot_stats().transfers, 1);
        assert_eq!(m.snapshot_stats().accesses, 2);
    }

    #[test]
    fn single_block_cache_thrashes() {
        let mut m = mem(4, 1);
        let a = m.register_arena(16);
        for i in [0, 4, 0] {
            m.access(a, i, AccessKind::Read).unwrap();
        }
        let s = m.snapshot_stats();
        assert_eq!(s.transfers, 3);
        assert_eq!(s.evictions, 2);
    }

    #[test]
    fn reset_and_snapshot() {
        let mut m = mem(4, 2);
        let a = m.register_arena(8);
        m.access(a, 1, AccessKind::Write).unwrap();
        assert_eq!(m.snapshot_stats().transfers, 1);
        assert_eq!(m.snapshot_stats(), m.snapshot_stats());
        m.reset_stats();
        assert_eq!(m.snapshot_stats(), TransferStats::default());
    }

    #[test]
    fn arenas_map_to_disjoint_blocks() {
        let mut m = mem(4, 8);
        let a = m.register_arena(16);
        let blocks: std::collections::BTreeSet<u64> = (0..16).map(|i| m.block_of(a, i).unwrap()).collect();
        assert_eq!(blocks.len(), 4);

        let x = m.register_arena(4);
        let y = m.register_arena(4);
        assert_ne!(m.block_of(x, 0).unwrap(), m.block_of(y, 0).unwrap());

        let z = m.register_arena(5);
        assert_ne!(m.block_of(z, 4).unwrap(), m.block_of(z, 0).unwrap());
    }

    #[test]
    fn out_of_bounds_is_a_fault() {
        let mut m = mem(4, 8);
        let a = m.register_arena(5);
        assert!(matches!(m.access(a, 5, AccessKind::Read), Err(Error::OutOfBounds { .. })));
        assert!(m.access(ArenaId(99), 0, AccessKind::Read).is_err());
    }

    #[test]
    fn disabled_memory_never_counts() {
        let mut m = BlockMemory::new(BlockMemoryConfig { enabled: false, ..BlockMemoryConfig::new(4, 4).unwrap() });
        let a = m.register_arena(64);
        for i in 0..64 {
            m.access(a, i, AccessKind::Read).unwrap();
        }
        assert_eq!(m.snapshot_stats(), TransferStats::default());
    }

    #[test]
    fn tracked_stack_round_trip() {
        let h = MemoryHandle::new(BlockMemoryConfig::new(2, 2).unwrap());
        let mut s: TrackedStack<u32> = TrackedStack::with_capacity(&h, 4);
        s.push(1);
        s.push(2);
        assert_eq!(s.top(), Some(2));
        assert_eq!(s.pop(), Some(2));
        assert_eq!(s.pop(), Some(1));
        assert_eq!(s.pop(), None);
        assert!(h.snapshot_stats().accesses >= 4);
    }
}

use super::{placed_in, Geometry, Interval, IntervalPlan, Pma, Slot, UpdateOp, NIL};
use crate::error::{Error, Result};
use crate::memory::{MemoryHandle, TrackedVec};

/// `(parent, child rank, child)` with both positions already in new coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Change {
    pub parent: u32,
    pub rank: u8,
    pub child: u32,
}

/// Preallocated list of pointer updates collected during a batch.
#[derive(Debug)]
pub struct ChangeList {
    items: TrackedVec<Change>,
    len: usize,
}

impl ChangeList {
    pub fn with_capacity(mem: &MemoryHandle, capacity: usize) -> Self {
        ChangeList { items: TrackedVec::filled(mem, capacity.max(1), Change::default()), len: 0 }
    }

    pub fn push(&mut self, parent: usize, rank: usize, child: usize) -> Result<()> {
        if self.len == self.items.len() {
            return Err(Error::Recalc(format!("change list full at {} entries", self.len)));
        }
        self.items.set(self.len, Change { parent: parent as u32, rank: rank as u8, child: child as u32 });
        self.len += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Change {
        *self.items.get(i)
    }

    pub fn to_vec(&self) -> Vec<Change> {
        self.items.untracked()[..self.len].to_vec()
    }
}

/// `M[i][j]`: cell of the `j`-th new slot of the `i`-th operation.
#[derive(Debug)]
pub struct InsertPositions {
    starts: Vec<usize>,
    cells: TrackedVec<u32>,
}

impl InsertPositions {
    fn new(mem: &MemoryHandle, ops: &[UpdateOp]) -> Self {
        let mut starts = Vec::with_capacity(ops.len() + 1);
        let mut total = 0;
        for op in ops {
            starts.push(total);
            if let UpdateOp::Insert { count, .. } = op {
                total += count;
            }
        }
        starts.push(total);
        InsertPositions { starts, cells: TrackedVec::filled(mem, total, NIL) }
    }

    pub fn empty() -> Self {
        InsertPositions { starts: vec![0], cells: TrackedVec::from_vec(&MemoryHandle::untracked(), Vec::new()) }
    }

    /// Number of operations.
    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tracked read of `M[op][j]`.
    pub fn get(&self, op: usize, j: usize) -> usize {
        *self.cells.get(self.starts[op] + j) as usize
    }

    fn set(&mut self, op: usize, j: usize, cell: usize) {
        self.cells.set(self.starts[op] + j, cell as u32);
    }

    /// Untracked row view.
    pub fn row(&self, op: usize) -> &[u32] {
        &self.cells.untracked()[self.starts[op]..self.starts[op + 1]]
    }
}

/// Callbacks run while cells still sit at their old positions.
pub trait BatchHooks<P> {
    /// Appends pointer updates for vertices of `interval`; survivors carry their target in `relocation`.
    fn recalc(&mut self, pma: &Pma<P>, interval: &Interval, changes: &mut ChangeList) -> Result<()>;

    /// Runs once after every interval was recalculated, before any slot moves.
    fn relocated(&mut self, _pma: &Pma<P>) {}
}

/// Hooks for arrays whose slots carry no pointers.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoRecalc;

impl<P> BatchHooks<P> for NoRecalc {
    fn recalc(&mut self, _: &Pma<P>, _: &Interval, _: &mut ChangeList) -> Result<()> {
        Ok(())
    }
}

impl<P: Copy + Default> Pma<P> {
    /// Writes each survivor's target into its `relocation` field and returns the
    /// targets of the new slots.
    pub fn calc_new_positions(&mut self, ops: &[UpdateOp], plan: &IntervalPlan) -> Result<InsertPositions> {
        let resize = plan.target_size != self.size();
        let mut m = InsertPositions::new(&self.mem, ops);
        let mut o = 0usize;
        for iv in &plan.intervals {
            let (base, cap) = if resize { (0, plan.target_size) } else { (iv.first, iv.len()) };
            let n = iv.count;
            let place = |k: usize| base + (k as u128 * cap as u128 / n as u128) as usize;
            let mut k = 0usize;
            for i in iv.first..=iv.last {
                self.counters.scanned += 1;
                if i == 0 {
                    if let Some(&UpdateOp::Insert { after: None, count }) = ops.get(o) {
                        for t in 0..count {
                            m.set(o, t, place(k));
                            k += 1;
                        }
                        o += 1;
                    }
                }
                if !self.slot(i).occupied {
                    continue;
                }
                if let Some(&UpdateOp::Remove { first, last }) = ops.get(o) {
                    if first <= i {
                        if i == last {
                            o += 1;
                        }
                        continue;
                    }
                }
                self.slot_mut(i).relocation = place(k) as u32;
                k += 1;
                if let Some(&UpdateOp::Insert { after: Some(a), count }) = ops.get(o) {
                    if a == i {
                        for t in 0..count {
                            m.set(o, t, place(k));
                            k += 1;
                        }
                        o += 1;
                    }
                }
            }
            if k != n {
                self.clear_relocations(plan);
                return Err(Error::Invariant(format!(
                    "interval {}..={} planned {n} elements but placed {k}",
                    iv.first, iv.last
                )));
            }
        }
        if o != ops.len() {
            self.clear_relocations(plan);
            return Err(Error::Invariant(format!("{} operations fall outside the plan", ops.len() - o)));
        }
        Ok(m)
    }

    fn clear_relocations(&mut self, plan: &IntervalPlan) {
        for iv in &plan.intervals {
            for s in &mut self.cells.untracked_mut()[iv.first..=iv.last] {
                s.relocation = NIL;
            }
        }
    }

    /// Applies `ops` and returns where the new slots ended up.
    ///
    /// `hooks.recalc` runs for every interval before anything moves; if it fails the
    /// array is left exactly as it was.
    pub fn batch_update<H: BatchHooks<P>>(&mut self, ops: &[UpdateOp], hooks: &mut H) -> Result<InsertPositions> {
        if ops.is_empty() {
            self.validate_batch(ops)?;
            return Ok(InsertPositions::empty());
        }
        let plan = self.get_intervals(ops)?;
        self.apply_plan(ops, &plan, hooks)
    }

    /// Runs the batch with an already computed plan.
    pub fn apply_plan<H: BatchHooks<P>>(
        &mut self,
        ops: &[UpdateOp],
        plan: &IntervalPlan,
        hooks: &mut H,
    ) -> Result<InsertPositions> {
        let m = self.calc_new_positions(ops, plan)?;
        let mut changes = ChangeList::with_capacity(&self.mem, self.size());
        for iv in &plan.intervals {
            if let Err(e) = hooks.recalc(self, iv, &mut changes) {
                self.clear_relocations(plan);
                return Err(e);
            }
        }
        hooks.relocated(self);

        let resize = plan.target_size != self.size();
        let new_live = plan_total(plan, self.live, resize, &self.counts, &self.geometry);
        if resize {
            self.move_into_new_arena(plan.target_size);
        } else {
            for iv in &plan.intervals {
                self.move_interval(iv);
            }
        }
        for i in 0..changes.len() {
            let c = changes.get(i);
            self.cells.get_mut(c.parent as usize).children[c.rank as usize] = c.child;
        }
        for op in 0..m.len() {
            for &cell in m.row(op) {
                self.cells.set(cell as usize, Slot::fresh());
            }
        }
        self.live = new_live;
        if resize {
            self.recount_all();
            self.counters.rebuilds += 1;
        } else {
            for iv in &plan.intervals {
                self.recount_interval(iv);
            }
        }
        self.counters.batches += 1;
        Ok(m)
    }

    /// Compacts survivors to the end of the interval, then moves them forward to their targets.
    fn move_interval(&mut self, iv: &Interval) {
        let mut w = iv.last;
        let mut have = 0usize;
        for i in (iv.first..=iv.last).rev() {
            let s = *self.cells.get(i);
            if !s.occupied {
                continue;
            }
            if s.relocation == NIL {
                self.cells.set(i, Slot::default());
                continue;
            }
            if i != w {
                self.cells.set(w, s);
                self.cells.set(i, Slot::default());
                self.counters.moved += 1;
            }
            have += 1;
            w = w.wrapping_sub(1);
        }
        for p in iv.last + 1 - have..=iv.last {
            let mut s = *self.cells.get(p);
            let t = s.relocation as usize;
            s.relocation = NIL;
            if t != p {
                self.cells.set(t, s);
                self.cells.set(p, Slot::default());
                self.counters.moved += 1;
            } else {
                self.cells.set(p, s);
            }
        }
    }

    fn move_into_new_arena(&mut self, size: usize) {
        let mut fresh = TrackedVec::filled(&self.mem, size, Slot::default());
        for i in 0..self.size() {
            let mut s = *self.cells.get(i);
            if !s.occupied || s.relocation == NIL {
                continue;
            }
            let t = s.relocation as usize;
            s.relocation = NIL;
            fresh.set(t, s);
            self.counters.moved += 1;
        }
        self.cells = fresh;
        self.geometry = Geometry::for_size(size);
    }

    fn recount_interval(&mut self, iv: &Interval) {
        let g = self.geometry;
        let width = iv.len();
        let top = (width / g.segment).trailing_zeros() as usize;
        let node = g.node_of(iv.first, top);
        let delta = iv.count as i64 - *self.counts.get(node) as i64;
        for j in 0..=top {
            let w = g.segment << j;
            for start in (iv.first..=iv.last).step_by(w) {
                let c = placed_in(iv.first, width, iv.count, start, w);
                self.counts.set(g.node_of(start, j), c as u32);
            }
        }
        let mut y = node / 2;
        while y >= 1 {
            let c = self.counts.get_mut(y);
            *c = (*c as i64 + delta) as u32;
            y /= 2;
        }
    }
}

fn plan_total(plan: &IntervalPlan, live: usize, resize: bool, counts: &TrackedVec<u32>, g: &Geometry) -> usize {
    if resize {
        return plan.intervals.iter().map(|iv| iv.count).sum();
    }
    let mut total = live as i64;
    for iv in &plan.intervals {
        let top = (iv.len() / g.segment).trailing_zeros() as usize;
        total += iv.count as i64 - *counts.get(g.node_of(iv.first, top)) as i64;
    }
    total as usize
}

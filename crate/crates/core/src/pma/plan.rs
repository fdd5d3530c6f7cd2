use std::collections::BTreeMap;

use super::{placed_in, rebuild_size, Geometry, Pma};
use crate::error::{Error, Result};

/// One entry of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateOp {
    /// `count` new slots right after cell `after`, or before every element when `None`.
    Insert { after: Option<usize>, count: usize },
    /// Every occupied cell in `first..=last`; both ends must be occupied.
    Remove { first: usize, last: usize },
}

impl UpdateOp {
    fn anchor(&self) -> usize {
        match *self {
            UpdateOp::Insert { after, .. } => after.unwrap_or(0),
            UpdateOp::Remove { first, .. } => first,
        }
    }
}

/// A cell range redistributed uniformly; `count` is its element count after the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub first: usize,
    pub last: usize,
    pub count: usize,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.first <= i && i <= self.last
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalPlan {
    pub intervals: Vec<Interval>,
    pub target_size: usize,
}

impl IntervalPlan {
    /// Total number of cells covered, `K`.
    pub fn covered(&self) -> usize {
        self.intervals.iter().map(Interval::len).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    node: usize,
    first: usize,
    last: usize,
    n: usize,
}

pub(super) struct BatchTotals {
    pub inserted: usize,
    pub removed: usize,
}

impl<P: Copy + Default> Pma<P> {
    pub(super) fn validate_batch(&mut self, ops: &[UpdateOp]) -> Result<BatchTotals> {
        let size = self.size();
        let mut totals = BatchTotals { inserted: 0, removed: 0 };
        let mut prev_end: Option<usize> = None;
        let occupied = |pma: &Self, i: usize| i < size && pma.slot(i).occupied;
        for (k, op) in ops.iter().enumerate() {
            if std::mem::discriminant(op) != std::mem::discriminant(&ops[0]) {
                return Err(Error::Precondition("a batch may not mix inserts and removals".into()));
            }
            let (start, end) = match *op {
                UpdateOp::Insert { after, count } => {
                    if count == 0 {
                        return Err(Error::Precondition(format!("insert #{k} has count 0")));
                    }
                    totals.inserted += count;
                    match after {
                        None if k > 0 => return Err(Error::Precondition("a leading insert must come first".into())),
                        None => continue,
                        Some(a) => {
                            if !occupied(self, a) {
                                return Err(Error::Precondition(format!("insert anchor {a} is not an occupied cell")));
                            }
                            (a, a)
                        }
                    }
                }
                UpdateOp::Remove { first, last } => {
                    if first > last || !occupied(self, first) || !occupied(self, last) {
                        return Err(Error::Precondition(format!("remove {first}..={last} does not span occupied cells")));
                    }
                    for i in first..=last {
                        if self.slot(i).occupied {
                            totals.removed += 1;
                        }
                    }
                    (first, last)
                }
            };
            if let Some(p) = prev_end {
                if start <= p {
                    return Err(Error::Precondition(format!("operation #{k} is unsorted or overlaps its predecessor")));
                }
            }
            prev_end = Some(end);
        }
        Ok(totals)
    }

    /// Chooses the cell intervals to redistribute for `ops`.
    ///
    /// Nodes of the segment tree are grown from the leaf holding each operation
    /// until their post-batch density is acceptable; earlier intervals swallowed
    /// by a grown node are merged into it. Ancestors of the chosen intervals are
    /// then checked against their windows and widened where needed.
    pub fn get_intervals(&mut self, ops: &[UpdateOp]) -> Result<IntervalPlan> {
        let totals = self.validate_batch(ops)?;
        let size = self.size();
        if ops.is_empty() {
            return Ok(IntervalPlan { intervals: Vec::new(), target_size: size });
        }
        let total = self.live + totals.inserted - totals.removed;
        let g = self.geometry;
        let m = g.segment;
        let mut plan: Vec<Entry> = Vec::new();
        let mut o = 0usize;
        while o < ops.len() {
            let mut s = ops[o].anchor();
            if let Some(e) = plan.last() {
                s = s.max(e.last + 1);
            }
            let mut b = s / m;
            let mut first = b * m;
            let mut width = m;
            let mut j = 0usize;
            let mut n = self.scan_forward(ops, &mut o, first, first + m - 1);
            // A removal run must end inside the node that takes it, so every
            // interval finishes at least one operation.
            let straddles = |o: usize, end: usize| matches!(ops.get(o), Some(&UpdateOp::Remove { first, .. }) if first <= end);
            while !g.density_ok(n, width, j) || straddles(o, first + width - 1) {
                if width == size {
                    return Ok(self.rebuild_plan(total));
                }
                if b.is_multiple_of(2) {
                    n += self.scan_forward(ops, &mut o, first + width, first + 2 * width - 1);
                } else {
                    n += self.count_backward(&mut plan, first - width, first - 1);
                    first -= width;
                }
                width *= 2;
                b /= 2;
                j += 1;
            }
            plan.push(Entry { node: g.node_of(first, j), first, last: first + width - 1, n });
        }
        self.settle(plan, total)
    }

    /// Post-batch element count of `[lo, hi]`, consuming the operations anchored there.
    fn scan_forward(&mut self, ops: &[UpdateOp], o: &mut usize, lo: usize, hi: usize) -> usize {
        let mut n = 0;
        for i in lo..=hi {
            self.counters.scanned += 1;
            if i == 0 {
                if let Some(UpdateOp::Insert { after: None, count }) = ops.get(*o) {
                    n += count;
                    *o += 1;
                }
            }
            if !self.slot(i).occupied {
                continue;
            }
            match ops.get(*o) {
                Some(&UpdateOp::Remove { first, last }) if first <= i => {
                    if i == last {
                        *o += 1;
                    }
                }
                Some(&UpdateOp::Insert { after: Some(a), count }) if a == i => {
                    n += 1 + count;
                    *o += 1;
                }
                _ => n += 1,
            }
        }
        n
    }

    /// Post-batch count of `[lo, hi]`, which lies wholly before the scan position.
    /// Planned intervals inside it are popped and contribute their own counts.
    fn count_backward(&mut self, plan: &mut Vec<Entry>, lo: usize, hi: usize) -> usize {
        let mut n = 0;
        let mut skip: Vec<(usize, usize)> = Vec::new();
        while let Some(e) = plan.last().copied().filter(|e| e.first >= lo) {
            plan.pop();
            n += e.n;
            skip.push((e.first, e.last));
        }
        let mut i = hi as isize;
        let mut next_skip = skip.iter().peekable();
        while i >= lo as isize {
            if let Some(&&(sf, sl)) = next_skip.peek() {
                if i as usize <= sl {
                    i = sf as isize - 1;
                    next_skip.next();
                    continue;
                }
            }
            self.counters.scanned += 1;
            if self.slot(i as usize).occupied {
                n += 1;
            }
            i -= 1;
        }
        n
    }

    fn rebuild_plan(&self, total: usize) -> IntervalPlan {
        IntervalPlan {
            intervals: vec![Interval { first: 0, last: self.size() - 1, count: total }],
            target_size: rebuild_size(total),
        }
    }

    /// Widens intervals until every node on or under a changed path respects its window.
    fn settle(&self, mut plan: Vec<Entry>, total: usize) -> Result<IntervalPlan> {
        let g = self.geometry;
        let depth = |x: usize| usize::BITS - x.leading_zeros();
        loop {
            let mut deltas: BTreeMap<usize, i64> = BTreeMap::new();
            for e in &plan {
                let delta = e.n as i64 - *self.counts.get(e.node) as i64;
                let mut y = e.node / 2;
                while y >= 1 {
                    *deltas.entry(y).or_insert(0) += delta;
                    y /= 2;
                }
            }
            let mut worst: Option<usize> = None;
            let mut consider = |x: usize| {
                if worst.is_none_or(|w| depth(x) < depth(w)) {
                    worst = Some(x);
                }
            };
            for (&y, &d) in &deltas {
                let n = (*self.counts.get(y) as i64 + d) as usize;
                let (l, r, j) = g.node_range(y);
                if !g.density_ok(n, r - l + 1, j) {
                    consider(y);
                }
            }
            for e in &plan {
                if !placement_ok(&g, e) {
                    consider(e.node);
                }
            }
            let Some(bad) = worst else { break };
            if bad == 1 {
                return Ok(self.rebuild_plan(total));
            }
            let p = bad / 2;
            let (first, last, _) = g.node_range(p);
            let mut n = *self.counts.get(p) as i64;
            plan.retain(|e| {
                let inside = e.first >= first && e.last <= last;
                if inside {
                    n += e.n as i64 - *self.counts.get(e.node) as i64;
                }
                !inside
            });
            let at = plan.partition_point(|e| e.last < first);
            plan.insert(at, Entry { node: p, first, last, n: n as usize });
        }
        Ok(IntervalPlan {
            intervals: plan.iter().map(|e| Interval { first: e.first, last: e.last, count: e.n }).collect(),
            target_size: self.size(),
        })
    }
}

/// Whether spreading `e.n` elements uniformly over the node keeps the node and
/// every node beneath it inside its window.
fn placement_ok(g: &Geometry, e: &Entry) -> bool {
    let width = e.last - e.first + 1;
    let (_, _, top) = g.node_range(e.node);
    if !g.density_ok(e.n, width, top) {
        return false;
    }
    for j in 0..top {
        let w = g.segment << j;
        for start in (e.first..=e.last).step_by(w) {
            if !g.density_ok(placed_in(e.first, width, e.n, start, w), w, j) {
                return false;
            }
        }
    }
    true
}

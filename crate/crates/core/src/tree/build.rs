use crate::error::{Error, Result};
use crate::memory::{MemoryHandle, TrackedVec};
use crate::pma::{InsertPositions, Pma};
use crate::veb::{ary_subtree_size, cut_height, HTable};

use super::LayoutParams;

/// Per-depth cursors of the subtree builder.
#[derive(Debug)]
pub(crate) struct BuildScratch {
    /// Row of `M` holding each depth.
    rows: TrackedVec<u32>,
    /// Column in that row of the vertex currently built at each depth.
    cols: TrackedVec<u32>,
    /// Visits of the current vertex at each depth.
    visits: TrackedVec<u32>,
    /// Set when `cols[d]` already points at the next vertex to use at depth `d`.
    seeded: TrackedVec<bool>,
}

impl BuildScratch {
    pub(crate) fn new(mem: &MemoryHandle, height: usize) -> Self {
        BuildScratch {
            rows: TrackedVec::filled(mem, height, 0),
            cols: TrackedVec::filled(mem, height, 0),
            visits: TrackedVec::filled(mem, height, 0),
            seeded: TrackedVec::filled(mem, height, false),
        }
    }
}

/// Interval sizes of a new complete subtree rooted at depth `d`.
pub fn new_subtree_interval_sizes(h: &HTable, a: usize, mut d: usize) -> Result<Vec<usize>> {
    let big_h = h.height();
    if d >= big_h {
        return Err(Error::Domain(format!("depth {d} outside a tree of height {big_h}")));
    }
    let mut out = Vec::new();
    let mut n: usize = 1;
    while d < big_h {
        let size = ary_subtree_size(a, h[d])?;
        out.push(n.checked_mul(size).ok_or(Error::Overflow("interval size"))?);
        n = n.checked_mul(crate::veb::checked_pow(a, h[d]).ok_or(Error::Overflow("a^h"))?).ok_or(Error::Overflow("subtree count"))?;
        d += h[d];
    }
    Ok(out)
}

/// Wires depths and child pointers of the fresh slots in `m` into a complete
/// `a`-ary subtree rooted at depth `d0`; returns the root's cell.
pub(crate) fn build_subtree<P: Copy + Default>(
    pma: &mut Pma<P>,
    params: &LayoutParams,
    h: &HTable,
    s: &mut BuildScratch,
    d0: usize,
    m: &InsertPositions,
) -> Result<usize> {
    let big_h = params.height;
    let a = params.a;
    let sizes = new_subtree_interval_sizes(h, a, d0)?;
    if m.len() != sizes.len() || (0..m.len()).any(|i| m.row(i).len() != sizes[i]) {
        return Err(Error::Precondition(format!("insert positions do not have the shape {sizes:?}")));
    }

    let mut row = 0u32;
    let mut d = d0;
    while d < big_h {
        s.cols.set(d, 0);
        s.seeded.set(d, true);
        let span = h[d];
        for k in 0..span {
            s.rows.set(d + k, row);
            if k > 0 {
                s.seeded.set(d + k, false);
            }
        }
        d += span;
        row += 1;
    }

    let cell = |s: &BuildScratch, d: usize| m.get(*s.rows.get(d) as usize, *s.cols.get(d) as usize);
    s.visits.set(d0, 0);
    s.seeded.set(d0, false);
    let mut d = d0 as isize;
    while d >= d0 as isize {
        let du = d as usize;
        let k = *s.visits.get(du) + 1;
        s.visits.set(du, k);
        let v = cell(s, du);
        if k == 1 {
            pma.slot_mut(v).depth = du as u16;
        }
        if du == big_h - 1 || k as usize > a {
            d -= 1;
            continue;
        }
        if k == 1 {
            // Leftmost branch inside the decomposition subtree of `v`.
            let mut t = h[du];
            while t > 1 {
                t = cut_height(t, h.eps())?;
                let col = *s.cols.get(du) as usize + ary_subtree_size(a, t)?;
                s.cols.set(du + t, col as u32);
                s.seeded.set(du + t, true);
            }
        }
        let next = du + 1;
        if *s.seeded.get(next) {
            s.seeded.set(next, false);
        } else {
            // Right after the previous subtree of height h[next] rooted at this level.
            let col = *s.cols.get(du + h[next]) + 1;
            s.cols.set(next, col);
        }
        s.visits.set(next, 0);
        let w = cell(s, next);
        let slot = pma.slot_mut(v);
        slot.children[k as usize - 1] = w as u32;
        slot.degree = k as u8;
        d += 1;
    }
    Ok(m.get(0, 0))
}

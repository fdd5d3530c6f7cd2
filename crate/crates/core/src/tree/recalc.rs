//! Depth-first pointer recalculation over one memory interval.
//!
//! No parent pointers exist, so every in-interval vertex is reached from the
//! root. The DFS first jumps to the leftmost vertex of the deepest level present
//! in the interval, sweeps right, and then jumps back up to shallower levels
//! once everything after their leftmost vertex has been seen.

use crate::error::{Error, Result};
use crate::memory::{MemoryHandle, TrackedStack};
use crate::pma::{ChangeList, Interval, Pma, NIL};

/// Scratch stacks, allocated once per store.
#[derive(Debug)]
pub(crate) struct RecalcScratch {
    /// `(vertex, members before it)` for the first member of each deeper level.
    levels: TrackedStack<(u32, u32)>,
    /// Ancestors of the current vertex with the rank taken below each.
    ancestors: TrackedStack<(u32, u8)>,
}

impl RecalcScratch {
    pub(crate) fn new(mem: &MemoryHandle, height: usize) -> Self {
        RecalcScratch {
            levels: TrackedStack::with_capacity(mem, height + 1),
            ancestors: TrackedStack::with_capacity(mem, height + 1),
        }
    }
}

/// Instrumentation of the DFS.
#[derive(Debug, Clone, Default)]
pub struct RecalcStats {
    /// Loop iterations, one per vertex the DFS stands on.
    pub visits: u64,
    /// Every visited cell in order, when enabled.
    pub log: Option<Vec<usize>>,
}

impl RecalcStats {
    pub fn with_log() -> Self {
        RecalcStats { visits: 0, log: Some(Vec::new()) }
    }
}

struct View<'a, P> {
    pma: &'a Pma<P>,
    iv: &'a Interval,
}

impl<P: Copy + Default> View<'_, P> {
    fn member(&self, v: usize) -> bool {
        self.iv.contains(v) && {
            let s = self.pma.slot(v);
            s.occupied && s.relocation != NIL
        }
    }

    fn target(&self, v: usize) -> usize {
        match self.pma.slot(v).relocation {
            NIL => v,
            r => r as usize,
        }
    }

    fn depth(&self, v: usize) -> usize {
        self.pma.slot(v).depth as usize
    }

    fn child(&self, v: usize, rank: usize) -> Option<usize> {
        self.pma.slot(v).child(rank)
    }

    /// Descendant of `v` at depth `d` along the leftmost (or rightmost) branch.
    fn extreme(&self, mut v: usize, d: usize, right: bool) -> usize {
        while self.depth(v) < d {
            let s = self.pma.slot(v);
            let rank = if right { s.degree as usize - 1 } else { 0 };
            v = s.children[rank] as usize;
        }
        v
    }

    /// Whether `target` (at depth `dt`) lies in the subtree of `v`.
    ///
    /// Vertices of one level are stored left to right, so the subtree of `v`
    /// owns exactly the level-`dt` cells between its extreme descendants.
    fn covers(&self, v: usize, target: usize, dt: usize) -> bool {
        let dv = self.depth(v);
        if dv > dt {
            return false;
        }
        if dv == dt {
            return v == target;
        }
        self.extreme(v, dt, false) <= target && target <= self.extreme(v, dt, true)
    }
}

/// Appends `(new parent, rank, new child)` for every member of `iv` except the root.
pub(crate) fn recalculate_pointers<P: Copy + Default>(
    pma: &Pma<P>,
    root: usize,
    iv: &Interval,
    out: &mut ChangeList,
    scratch: &mut RecalcScratch,
    stats: &mut RecalcStats,
) -> Result<()> {
    let view = View { pma, iv };
    let levels = &mut scratch.levels;
    let ancestors = &mut scratch.ancestors;
    levels.clear();
    ancestors.clear();

    let mut n = 0u32;
    let mut deepest: Option<usize> = None;
    for v in iv.first..=iv.last {
        if !view.member(v) {
            continue;
        }
        let d = view.depth(v);
        if deepest.is_none_or(|x| x < d) {
            levels.push((v as u32, n));
            deepest = Some(d);
        }
        n += 1;
    }
    let Some((first_deep, _)) = levels.top() else { return Ok(()) };

    let mut target: Option<(usize, usize)> = Some((first_deep as usize, view.depth(first_deep as usize)));
    let mut v = root;
    loop {
        stats.visits += 1;
        if let Some(log) = stats.log.as_mut() {
            log.push(v);
        }
        if view.member(v) {
            if v != root {
                let (u, rank) = ancestors.top().ok_or_else(|| Error::Recalc(format!("member {v} reached without a parent")))?;
                out.push(view.target(u as usize), rank as usize, view.target(v))?;
            }
            n -= 1;
            while levels.top().is_some_and(|(x, _)| (x as usize) > v) {
                levels.pop();
            }
            if let Some((_, count)) = levels.top() {
                if n == count {
                    levels.pop();
                    if n == 0 {
                        break;
                    }
                    let (x, _) = levels.top().ok_or_else(|| Error::Recalc("level stack drained early".into()))?;
                    target = Some((x as usize, view.depth(x as usize)));
                }
            }
        }
        if target.is_some_and(|(t, _)| t == v) {
            target = None;
        }
        if let Some((t, dt)) = target {
            while !view.covers(v, t, dt) {
                let (u, _) = ancestors.pop().ok_or_else(|| Error::Recalc(format!("cell {t} is not below the root")))?;
                v = u as usize;
            }
            let degree = pma.slot(v).degree as usize;
            let rank = (0..degree)
                .find(|&r| view.covers(view.child(v, r).unwrap_or(NIL as usize), t, dt))
                .ok_or_else(|| Error::Recalc(format!("no child of {v} leads to {t}")))?;
            ancestors.push((v as u32, rank as u8));
            v = view.child(v, rank).unwrap_or(NIL as usize);
            if v == t {
                target = None;
            }
        } else {
            // Continue the DFS: next child to the right of `from`, or climb.
            let mut from: Option<usize> = None;
            loop {
                let rank = from.map_or(0, |r| r + 1);
                match view.child(v, rank) {
                    Some(c) if !view.member(v) || view.member(c) => {
                        ancestors.push((v as u32, rank as u8));
                        v = c;
                        break;
                    }
                    _ => {
                        let (u, r) = ancestors.pop().ok_or_else(|| Error::Recalc(format!("{n} members never reached")))?;
                        v = u as usize;
                        from = Some(r as usize);
                    }
                }
            }
        }
    }
    Ok(())
}

//! Arithmetic of the ε-parametrised van Emde Boas decomposition.
//!
//! A tree of height `h > 1` is cut between levels `t - 1` and `t` where
//! `t = max(⌊ε·h⌋, 1)`; the top part is laid out first, followed by every
//! bottom part left to right, recursively. Because leaves share one depth,
//! the decomposition only depends on depths, which is what the [`HTable`]
//! captures.

use std::fmt;
use std::str::FromStr;

use crate::error::{parse_err, Error, Result};

/// Exact rational ε in `(0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Eps {
    num: u32,
    den: u32,
}

impl Eps {
    pub const HALF: Eps = Eps { num: 1, den: 2 };
    pub const THIRD: Eps = Eps { num: 1, den: 3 };
    pub const QUARTER: Eps = Eps { num: 1, den: 4 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || 2 * num as u64 > den as u64 {
            return Err(Error::Domain(format!("eps must lie in (0, 1/2], got {num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Eps { num: num / g, den: den / g })
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `⌊ε·h⌋`, exactly.
    pub fn floor_mul(self, h: usize) -> usize {
        ((h as u128 * self.num as u128) / self.den as u128) as usize
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Eps {
    type Err = Error;

    /// Accepts `p/q` or a bare integer-free decimal such as `0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: u32 = n.trim().parse().map_err(|_| parse_err(1, format!("bad numerator in {s:?}")))?;
            let d: u32 = d.trim().parse().map_err(|_| parse_err(1, format!("bad denominator in {s:?}")))?;
            return Eps::new(n, d);
        }
        let (int, frac) = s.split_once('.').ok_or_else(|| parse_err(1, format!("expected p/q or decimal, got {s:?}")))?;
        if !int.trim_start_matches('0').is_empty() || frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(parse_err(1, format!("expected a decimal in (0, 0.5], got {s:?}")));
        }
        let num: u32 = frac.parse().map_err(|_| parse_err(1, format!("bad decimal {s:?}")))?;
        Eps::new(num, 10u32.pow(frac.len() as u32))
    }
}

/// Height of the top part when a tree of height `h ≥ 2` is cut.
pub fn cut_height(h: usize, eps: Eps) -> Result<usize> {
    if h < 2 {
        return Err(Error::Domain(format!("trees of height {h} are never cut")));
    }
    Ok(eps.floor_mul(h).max(1))
}

/// Vertex count of a complete `a`-ary tree of height `h`.
pub fn ary_subtree_size(a: usize, h: usize) -> Result<usize> {
    if a < 2 || h == 0 {
        return Err(Error::Domain(format!("ary_subtree_size needs a >= 2 and h >= 1, got a={a}, h={h}")));
    }
    let pow = checked_pow(a, h).ok_or(Error::Overflow("a^h"))?;
    Ok((pow - 1) / (a - 1))
}

pub(crate) fn checked_pow(a: usize, h: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..h {
        acc = acc.checked_mul(a)?;
    }
    Some(acc)
}

/// `h[d]`: height of the largest decomposition subtree rooted at depth `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HTable {
    heights: Vec<usize>,
    eps: Eps,
}

impl HTable {
    pub fn build(height: usize, eps: Eps) -> Result<Self> {
        if height == 0 {
            return Err(Error::Domain("tree height must be positive".into()));
        }
        let mut h = vec![0usize; height];
        h[0] = height;
        for i in 0..height {
            let mut cur = h[i];
            while cur > 1 {
                let whole = cur;
                cur = cut_height(whole, eps)?;
                h[i + cur] = whole - cur;
            }
        }
        if let Some(d) = h.iter().position(|&x| x == 0) {
            return Err(Error::Invariant(format!("h[{d}] left unset")));
        }
        Ok(HTable { heights: h, eps })
    }

    pub fn height(&self) -> usize {
        self.heights.len()
    }

    pub fn eps(&self) -> Eps {
        self.eps
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.heights
    }

    /// Checks `h[0] = H`, the cut recurrence, and that every subtree stays within the tree.
    pub fn check(&self) -> Result<()> {
        let h = &self.heights;
        let big_h = h.len();
        if h[0] != big_h {
            return Err(Error::Invariant(format!("h[0] = {} != H = {big_h}", h[0])));
        }
        for d in 0..big_h {
            if h[d] == 0 || d + h[d] > big_h {
                return Err(Error::Invariant(format!("h[{d}] = {} overflows height {big_h}", h[d])));
            }
            if h[d] > 1 {
                let t = cut_height(h[d], self.eps)?;
                if h[d + t] != h[d] - t {
                    return Err(Error::Invariant(format!(
                        "h[{}] = {} but cutting h[{d}] = {} leaves {}",
                        d + t,
                        h[d + t],
                        h[d],
                        h[d] - t
                    )));
                }
            }
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for HTable {
    type Output = usize;
    fn index(&self, d: usize) -> &usize {
        &self.heights[d]
    }
}

/// Plain pointer tree used as a reference model and as input of the layout oracle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExplicitTree {
    children: Vec<Vec<usize>>,
    alive: Vec<bool>,
    root: usize,
}

impl ExplicitTree {
    pub fn single() -> Self {
        ExplicitTree { children: vec![Vec::new()], alive: vec![true], root: 0 }
    }

    /// Complete `arity`-ary tree of the given height.
    pub fn complete(arity: usize, height: usize) -> Self {
        let mut t = ExplicitTree::single();
        let root = t.root;
        t.grow(root, arity, height);
        t
    }

    fn new_node(&mut self) -> usize {
        self.children.push(Vec::new());
        self.alive.push(true);
        self.children.len() - 1
    }

    fn grow(&mut self, v: usize, arity: usize, height: usize) {
        if height <= 1 {
            return;
        }
        for _ in 0..arity {
            let c = self.new_node();
            self.children[v].push(c);
            self.grow(c, arity, height - 1);
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn add_child(&mut self, parent: usize) -> usize {
        let c = self.new_node();
        self.children[parent].push(c);
        c
    }

    /// Inserts a complete `arity`-ary subtree of `height` as child `rank` of `parent`.
    pub fn insert_complete(&mut self, parent: usize, rank: usize, arity: usize, height: usize) -> usize {
        let c = self.new_node();
        self.grow(c, arity, height);
        self.children[parent].insert(rank, c);
        c
    }

    pub fn remove_child(&mut self, parent: usize, rank: usize) -> usize {
        let c = self.children[parent].remove(rank);
        let mut stack = vec![c];
        while let Some(x) = stack.pop() {
            self.alive[x] = false;
            stack.extend(self.children[x].iter().copied());
        }
        c
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub fn len(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One past the largest node id handed out so far, removed nodes included.
    pub fn id_bound(&self) -> usize {
        self.alive.len()
    }

    /// Node id reached by following child ranks from the root.
    pub fn follow(&self, ranks: &[usize]) -> Option<usize> {
        let mut v = self.root;
        for &r in ranks {
            v = *self.children[v].get(r)?;
        }
        Some(v)
    }

    /// Depth of every leaf, if all are equal.
    pub fn uniform_height(&self) -> Option<usize> {
        let mut height = None;
        let mut stack = vec![(self.root, 1usize)];
        while let Some((v, h)) = stack.pop() {
            if self.children[v].is_empty() {
                match height {
                    None => height = Some(h),
                    Some(x) if x != h => return None,
                    _ => {}
                }
            }
            stack.extend(self.children[v].iter().map(|&c| (c, h + 1)));
        }
        height
    }

    /// All vertices `depth` levels below `v`, left to right.
    fn level_below(&self, v: usize, depth: usize) -> Vec<usize> {
        let mut level = vec![v];
        for _ in 0..depth {
            level = level.iter().flat_map(|&x| self.children[x].iter().copied()).collect();
        }
        level
    }

    /// Structural equality of two trees (children order significant).
    pub fn isomorphic(&self, other: &ExplicitTree) -> bool {
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            let (ca, cb) = (&self.children[a], &other.children[b]);
            if ca.len() != cb.len() {
                return false;
            }
            stack.extend(ca.iter().copied().zip(cb.iter().copied()));
        }
        true
    }
}

/// Reference van Emde Boas permutation, rebuilt from scratch by direct recursion.
pub fn veb_permutation_oracle(tree: &ExplicitTree, eps: Eps) -> Result<Vec<usize>> {
    let height = tree
        .uniform_height()
        .ok_or_else(|| Error::Invariant("leaves are not all at the same depth".into()))?;
    let mut out = Vec::with_capacity(tree.len());
    layout(tree, tree.root, height, eps, &mut out)?;
    Ok(out)
}

fn layout(tree: &ExplicitTree, v: usize, h: usize, eps: Eps, out: &mut Vec<usize>) -> Result<()> {
    if h == 1 {
        out.push(v);
        return Ok(());
    }
    let top = cut_height(h, eps)?;
    layout(tree, v, top, eps, out)?;
    for w in tree.level_below(v, top) {
        layout(tree, w, h - top, eps, out)?;
    }
    Ok(())
}

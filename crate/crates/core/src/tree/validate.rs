use std::fmt;

use super::{Payload, TreeStore};
use crate::error::{Error, Result};
use crate::pma::NIL;
use crate::veb::{veb_permutation_oracle, ExplicitTree};

/// One broken invariant found by [`TreeStore::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RootNotFirst { root: usize, first: usize },
    Degree { cell: usize, degree: usize },
    Height { cell: usize, depth: usize },
    DanglingChild { cell: usize, rank: usize, target: usize },
    ChildDepth { cell: usize, rank: usize, target: usize },
    SharedChild { target: usize },
    Unreachable { count: usize },
    EdgeCount { edges: usize, expected: usize },
    StaleRelocation { cell: usize },
    Density { node: usize, count: usize },
    Layout { position: usize, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootNotFirst { root, first } => write!(f, "root at cell {root} but first live cell is {first}"),
            Violation::Degree { cell, degree } => write!(f, "degree: cell {cell} has {degree} children"),
            Violation::Height { cell, depth } => write!(f, "height: cell {cell} at depth {depth}"),
            Violation::DanglingChild { cell, rank, target } => {
                write!(f, "pointer: child {rank} of cell {cell} points at blank or missing cell {target}")
            }
            Violation::ChildDepth { cell, rank, target } => {
                write!(f, "pointer: child {rank} of cell {cell} (cell {target}) has the wrong depth")
            }
            Violation::SharedChild { target } => write!(f, "pointer: cell {target} has more than one parent"),
            Violation::Unreachable { count } => write!(f, "pointer: {count} live cells unreachable from the root"),
            Violation::EdgeCount { edges, expected } => write!(f, "pointer: {edges} child edges, expected {expected}"),
            Violation::StaleRelocation { cell } => write!(f, "cell {cell} still carries a relocation"),
            Violation::Density { node, count } => write!(f, "density: segment-tree node {node} holds {count}"),
            Violation::Layout { position, expected, found } => {
                write!(f, "layout: live position {position} holds cell {found}, oracle expects cell {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl<P: Payload> TreeStore<P> {
    /// Full scan of the degree, height, pointer, density and layout invariants.
    pub fn validate(&self) -> ValidationReport {
        let cells = self.pma.cells();
        let params = self.params;
        let leaf = params.height - 1;
        let mut out = Vec::new();

        let live: Vec<usize> = self.pma.occupied().collect();
        if live.first() != Some(&self.root) {
            out.push(Violation::RootNotFirst { root: self.root, first: live.first().copied().unwrap_or(NIL as usize) });
        }
        let mut edges = 0usize;
        let mut parents = vec![0u8; cells.len()];
        let mut pointer_ok = true;
        for &i in &live {
            let s = &cells[i];
            let depth = s.depth as usize;
            let degree = s.degree as usize;
            if s.relocation != NIL {
                out.push(Violation::StaleRelocation { cell: i });
            }
            if depth > leaf || (depth == leaf) != (degree == 0) {
                out.push(Violation::Height { cell: i, depth });
            }
            if depth < leaf && degree > 0 && (degree < params.a || degree > params.b) {
                out.push(Violation::Degree { cell: i, degree });
            }
            for rank in 0..degree.min(s.children.len()) {
                let t = s.children[rank] as usize;
                edges += 1;
                if t >= cells.len() || !cells[t].occupied {
                    out.push(Violation::DanglingChild { cell: i, rank, target: t });
                    pointer_ok = false;
                    continue;
                }
                if cells[t].depth as usize != depth + 1 {
                    out.push(Violation::ChildDepth { cell: i, rank, target: t });
                    pointer_ok = false;
                }
                parents[t] = parents[t].saturating_add(1);
                if parents[t] == 2 {
                    out.push(Violation::SharedChild { target: t });
                    pointer_ok = false;
                }
            }
        }
        if edges + 1 != live.len() {
            out.push(Violation::EdgeCount { edges, expected: live.len().saturating_sub(1) });
            pointer_ok = false;
        }
        for (node, count) in self.pma.density_violations() {
            out.push(Violation::Density { node, count });
        }
        if pointer_ok {
            match self.to_explicit() {
                Ok((tree, cell_of)) => {
                    if cell_of.len() != live.len() {
                        out.push(Violation::Unreachable { count: live.len() - cell_of.len() });
                    } else if let Ok(order) = veb_permutation_oracle(&tree, params.eps) {
                        for (position, (&node, &found)) in order.iter().zip(&live).enumerate() {
                            if cell_of[node] != found {
                                out.push(Violation::Layout { position, expected: cell_of[node], found });
                                break;
                            }
                        }
                    }
                }
                Err(_) => out.push(Violation::Unreachable { count: live.len() }),
            }
        }
        ValidationReport { violations: out }
    }

    /// The stored tree as an explicit tree, with the cell of every node.
    pub fn to_explicit(&self) -> Result<(ExplicitTree, Vec<usize>)> {
        let cells = self.pma.cells();
        if self.root >= cells.len() || !cells[self.root].occupied {
            return Err(Error::Invariant("root cell is blank".into()));
        }
        let mut tree = ExplicitTree::single();
        let mut cell_of = vec![self.root];
        let mut seen = vec![false; cells.len()];
        seen[self.root] = true;
        let mut stack = vec![(self.root, tree.root())];
        while let Some((cell, node)) = stack.pop() {
            let s = &cells[cell];
            for rank in 0..s.degree as usize {
                let t = s.children[rank] as usize;
                if t >= cells.len() || !cells[t].occupied || seen[t] {
                    return Err(Error::Invariant(format!("bad child pointer {cell} -> {t}")));
                }
                seen[t] = true;
                let id = tree.add_child(node);
                debug_assert_eq!(id, cell_of.len());
                cell_of.push(t);
                stack.push((t, id));
            }
        }
        Ok((tree, cell_of))
    }

    /// Whether the stored tree has the same shape as `other`.
    pub fn isomorphic_to(&self, other: &ExplicitTree) -> bool {
        self.to_explicit().map(|(t, _)| t.isomorphic(other)).unwrap_or(false)
    }
}

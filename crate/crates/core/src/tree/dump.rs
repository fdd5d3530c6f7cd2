use std::collections::HashMap;

use super::{Payload, TreeStore};
use crate::error::{parse_err, Error, Result};
use crate::veb::ExplicitTree;

/// One live vertex of a text dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDumpRow {
    pub cell: usize,
    pub depth: usize,
    pub children: Vec<usize>,
    pub payload: Vec<u8>,
}

impl<P: Payload> TreeStore<P> {
    /// `cell,depth,children,payload-hex` per live vertex in cell order;
    /// children are `;`-separated cells.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in self.pma.occupied() {
            let s = &self.pma.cells()[i];
            let children: Vec<String> = (0..s.degree as usize).map(|r| s.children[r].to_string()).collect();
            out.push_str(&format!("{i},{},{},{}\n", s.depth, children.join(";"), hex::encode(s.payload.to_bytes())));
        }
        out
    }
}

pub fn parse_tree_dump(text: &str) -> Result<Vec<TreeDumpRow>> {
    let mut rows: Vec<TreeDumpRow> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(ln, format!("expected 4 fields, found {}", fields.len())));
        }
        let cell: usize = fields[0].parse().map_err(|_| parse_err(ln, "bad cell"))?;
        if rows.last().is_some_and(|r| r.cell >= cell) {
            return Err(parse_err(ln, "cells must be strictly increasing"));
        }
        let depth: usize = fields[1].parse().map_err(|_| parse_err(ln, "bad depth"))?;
        let children = if fields[2].is_empty() {
            Vec::new()
        } else {
            fields[2]
                .split(';')
                .map(|c| c.parse::<usize>().map_err(|_| parse_err(ln, format!("bad child {c:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        if children.len() > crate::pma::MAX_ARITY {
            return Err(parse_err(ln, "too many children"));
        }
        let payload = hex::decode(fields[3]).map_err(|e| parse_err(ln, format!("payload: {e}")))?;
        rows.push(TreeDumpRow { cell, depth, children, payload });
    }
    Ok(rows)
}

/// Rebuilds the tree shape of a dump, rooted at its first row.
pub fn rows_to_explicit(rows: &[TreeDumpRow]) -> Result<ExplicitTree> {
    let first = rows.first().ok_or_else(|| Error::Invariant("empty dump".into()))?;
    let index: HashMap<usize, usize> = rows.iter().enumerate().map(|(k, r)| (r.cell, k)).collect();
    let mut tree = ExplicitTree::single();
    let mut seen = vec![false; rows.len()];
    seen[0] = true;
    let mut stack = vec![(0usize, tree.root())];
    let mut reached = 1;
    while let Some((row, node)) = stack.pop() {
        for &c in &rows[row].children {
            let k = *index.get(&c).ok_or_else(|| Error::Invariant(format!("child cell {c} is not in the dump")))?;
            if seen[k] {
                return Err(Error::Invariant(format!("cell {c} reached twice")));
            }
            if rows[k].depth != rows[row].depth + 1 {
                return Err(Error::Invariant(format!("cell {c} has depth {} under depth {}", rows[k].depth, rows[row].depth)));
            }
            seen[k] = true;
            reached += 1;
            stack.push((k, tree.add_child(node)));
        }
    }
    if reached != rows.len() || first.depth != 0 {
        return Err(Error::Invariant(format!("{} of {} rows reachable from the first", reached, rows.len())));
    }
    Ok(tree)
}

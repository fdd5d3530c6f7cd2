use super::{Slot, MAX_ARITY, NIL};
use crate::error::{parse_err, Error, Result};

/// One parsed line of a cell dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpRow {
    pub index: usize,
    pub occupied: bool,
    pub depth: u16,
    pub children: Vec<Option<usize>>,
}

/// `index,occupied,depth,child0..child{b-1}` per cell; absent children print as `-`.
pub fn dump_cells<P>(cells: &[Slot<P>], b: usize) -> String {
    let mut out = String::new();
    for (i, s) in cells.iter().enumerate() {
        out.push_str(&format!("{i},{},{}", s.occupied as u8, s.depth));
        for c in 0..b {
            match s.child(c) {
                Some(x) if s.occupied => out.push_str(&format!(",{x}")),
                _ => out.push_str(",-"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_dump(text: &str, b: usize) -> Result<Vec<DumpRow>> {
    if b == 0 || b > MAX_ARITY {
        return Err(Error::Domain(format!("arity {b} outside 1..={MAX_ARITY}")));
    }
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 + b {
            return Err(parse_err(ln, format!("expected {} fields, found {}", 3 + b, fields.len())));
        }
        let index: usize = fields[0].parse().map_err(|_| parse_err(ln, "bad index"))?;
        if index != rows.len() {
            return Err(parse_err(ln, format!("expected index {}, found {index}", rows.len())));
        }
        let occupied = match fields[1] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(ln, format!("occupied flag {other:?}"))),
        };
        let depth: u16 = fields[2].parse().map_err(|_| parse_err(ln, "bad depth"))?;
        let mut children = Vec::with_capacity(b);
        for f in &fields[3..] {
            children.push(match *f {
                "-" => None,
                x => {
                    let v: usize = x.parse().map_err(|_| parse_err(ln, format!("bad child {x:?}")))?;
                    if v >= NIL as usize {
                        return Err(parse_err(ln, "child index out of range"));
                    }
                    Some(v)
                }
            });
        }
        if let Some(pos) = children.iter().position(Option::is_none) {
            if children[pos..].iter().any(Option::is_some) {
                return Err(parse_err(ln, "children must be a prefix"));
            }
        }
        rows.push(DumpRow { index, occupied, depth, children });
    }
    Ok(rows)
}

use std::fmt::Write as _;

use super::PersistentArray;
use crate::error::{parse_err, Result};

/// One line of a snapshot export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotRow {
    pub version: u64,
    pub cell: usize,
    pub value: i64,
}

impl PersistentArray {
    /// Newline-delimited `cell,value`, oldest write first.
    pub fn export_log(&self) -> String {
        let mut out = String::new();
        for &(i, x) in self.log() {
            writeln!(out, "{i},{x}").unwrap();
        }
        out
    }

    /// `version,cell,value` for every cell at `version`, under a header line.
    pub fn export_snapshot(&mut self, version: u64) -> Result<String> {
        let mut out = String::from("version,cell,value\n");
        for (i, x) in self.snapshot(version)?.into_iter().enumerate() {
            writeln!(out, "{version},{i},{x}").unwrap();
        }
        Ok(out)
    }
}

fn fields<const N: usize>(line: &str, ln: usize) -> Result<[&str; N]> {
    let parts: Vec<&str> = line.split(',').map(str::trim).collect();
    parts.try_into().map_err(|p: Vec<&str>| parse_err(ln, format!("expected {N} fields, found {}", p.len())))
}

pub fn parse_log(text: &str) -> Result<Vec<(usize, i64)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let [cell, value] = fields::<2>(line, k + 1)?;
        let cell = cell.parse().map_err(|_| parse_err(k + 1, format!("bad cell {cell:?}")))?;
        let value = value.parse().map_err(|_| parse_err(k + 1, format!("bad value {value:?}")))?;
        out.push((cell, value));
    }
    Ok(out)
}

/// Accepts an optional `version,cell,value` header.
pub fn parse_snapshot(text: &str) -> Result<Vec<SnapshotRow>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (k == 0 && line.trim() == "version,cell,value") {
            continue;
        }
        let [version, cell, value] = fields::<3>(line, k + 1)?;
        out.push(SnapshotRow {
            version: version.parse().map_err(|_| parse_err(k + 1, format!("bad version {version:?}")))?,
            cell: cell.parse().map_err(|_| parse_err(k + 1, format!("bad cell {cell:?}")))?,
            value: value.parse().map_err(|_| parse_err(k + 1, format!("bad value {value:?}")))?,
        });
    }
    Ok(out)
}

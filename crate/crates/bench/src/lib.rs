//! Scenario runner and verification suites for the tree store.

mod verify;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use corobts::memory::{BlockMemoryConfig, MemoryHandle, TransferStats};
use corobts::persist::PersistentArray;
use corobts::pma::{NoRecalc, Pma, UpdateOp};
use corobts::tree::{LayoutParams, TreeStore};
use corobts::veb::Eps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use verify::{verify, Suite, VerifyOptions};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] corobts::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Search,
    InsertRemove,
    PmaChurn,
    Persist,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Search => "search",
            Scenario::InsertRemove => "insert-remove",
            Scenario::PmaChurn => "pma-churn",
            Scenario::Persist => "persist",
        }
    }
}

impl FromStr for Scenario {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        Ok(match s {
            "search" => Scenario::Search,
            "insert-remove" => Scenario::InsertRemove,
            "pma-churn" => Scenario::PmaChurn,
            "persist" => Scenario::Persist,
            other => return Err(BenchError::Usage(format!("unknown scenario {other:?}"))),
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One experiment. `n` is the vertex count for tree scenarios, the element
/// count for `pma-churn` and the capacity `U` for `persist`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub eps: Eps,
    pub a: usize,
    pub b: usize,
    pub block_size: usize,
    pub cache_blocks: usize,
    pub seed: u64,
    pub repetitions: usize,
    /// Writes issued by the `persist` scenario.
    pub writes: usize,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, n: usize) -> Self {
        ScenarioSpec {
            scenario,
            n,
            eps: Eps::HALF,
            a: 2,
            b: 4,
            block_size: 64,
            cache_blocks: 256,
            seed: 0,
            repetitions: 100,
            writes: 1000,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let positive = [
            ("n", self.n),
            ("block size", self.block_size),
            ("cache blocks", self.cache_blocks),
            ("repetitions", self.repetitions),
        ];
        if let Some((what, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(BenchError::Usage(format!("{what} must be positive")));
        }
        match self.scenario {
            Scenario::Search | Scenario::InsertRemove => {
                LayoutParams::new(self.eps, self.tree_height(), self.a, self.b).map_err(|e| BenchError::Usage(e.to_string()))?;
                if self.scenario == Scenario::InsertRemove && self.tree_height() < 2 {
                    return Err(BenchError::Usage("insert-remove needs n >= 3".into()));
                }
            }
            Scenario::Persist if self.n < 2 || !self.n.is_power_of_two() => {
                return Err(BenchError::Usage(format!("U must be a power of two >= 2, got {}", self.n)));
            }
            _ => {}
        }
        Ok(())
    }

    /// Height of the complete binary tree with about `n` vertices (`2^k` gives `k`).
    fn tree_height(&self) -> usize {
        (self.n.max(2).ilog2() as usize).max(1)
    }

    fn memory(&self) -> Result<MemoryHandle, BenchError> {
        Ok(MemoryHandle::new(BlockMemoryConfig::new(self.block_size, self.cache_blocks)?))
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub n: usize,
    pub eps: String,
    pub a: usize,
    pub b: usize,
    pub block_size: usize,
    pub cache_blocks: usize,
    pub operation: String,
    pub transfers: u64,
    pub accesses: u64,
    pub measured_quantity: f64,
}

impl Row {
    fn new(spec: &ScenarioSpec, operation: &str, stats: TransferStats, measured: f64) -> Self {
        Row {
            n: spec.n,
            eps: spec.eps.to_string(),
            a: spec.a,
            b: spec.b,
            block_size: spec.block_size,
            cache_blocks: spec.cache_blocks,
            operation: operation.to_string(),
            transfers: stats.transfers,
            accesses: stats.accesses,
            measured_quantity: measured,
        }
    }
}

pub fn run(spec: &ScenarioSpec) -> Result<Vec<Row>, BenchError> {
    spec.validate()?;
    match spec.scenario {
        Scenario::Search => run_search(spec),
        Scenario::InsertRemove => run_insert_remove(spec),
        Scenario::PmaChurn => run_pma_churn(spec),
        Scenario::Persist => run_persist(spec),
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["n", "eps", "a", "b", "block_size", "cache_blocks", "operation", "transfers", "accesses", "measured_quantity"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Cold-cache root-to-leaf descents; the measured quantity is the vertex count of the path.
fn run_search(spec: &ScenarioSpec) -> Result<Vec<Row>, BenchError> {
    let mem = spec.memory()?;
    let height = spec.tree_height();
    let t = TreeStore::<()>::init(LayoutParams::new(spec.eps, height, spec.a, spec.b)?, &mem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.repetitions);
    for _ in 0..spec.repetitions {
        let ranks: Vec<usize> = (0..height - 1).map(|_| rng.gen_range(0..spec.a)).collect();
        mem.flush_cache();
        let before = mem.snapshot_stats();
        let path = t.search_path(&ranks)?;
        rows.push(Row::new(spec, "descent", mem.snapshot_stats().since(&before), path.len() as f64));
    }
    Ok(rows)
}

/// Random leaf inserts and removes below leaf parents; the measured quantity is slots moved.
fn run_insert_remove(spec: &ScenarioSpec) -> Result<Vec<Row>, BenchError> {
    let mem = spec.memory()?;
    let height = spec.tree_height();
    let mut t = TreeStore::<()>::init(LayoutParams::new(spec.eps, height, spec.a, spec.b)?, &mem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.repetitions);
    for _ in 0..spec.repetitions {
        let mut ranks = Vec::new();
        let mut v = t.root();
        for _ in 0..height - 2 {
            let r = rng.gen_range(0..t.degree(v)?);
            ranks.push(r);
            v = t.child(v, r)?;
        }
        let degree = t.degree(v)?;
        let moved = t.pma().counters().moved;
        mem.flush_cache();
        let before = mem.snapshot_stats();
        let v = *t.search_path(&ranks)?.last().expect("non-empty path");
        let op = if degree == spec.a || (degree < spec.b && rng.gen_bool(0.5)) {
            t.insert_subtree(v, rng.gen_range(0..=degree))?;
            "insert"
        } else {
            t.remove_subtree(v, rng.gen_range(0..degree))?;
            "remove"
        };
        let stats = mem.snapshot_stats().since(&before);
        rows.push(Row::new(spec, op, stats, (t.pma().counters().moved - moved) as f64));
    }
    Ok(rows)
}

/// Single inserts and removes at uniform ranks; the measured quantity is slots moved.
fn run_pma_churn(spec: &ScenarioSpec) -> Result<Vec<Row>, BenchError> {
    let mem = spec.memory()?;
    let mut p: Pma<u64> = Pma::new(&mem);
    p.batch_update(&[UpdateOp::Insert { after: None, count: spec.n }], &mut NoRecalc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.repetitions);
    for _ in 0..spec.repetitions {
        let cells: Vec<usize> = p.occupied().collect();
        let (name, op) = if cells.len() < 2 || rng.gen_bool(0.5) {
            let r = rng.gen_range(0..=cells.len());
            ("insert", UpdateOp::Insert { after: r.checked_sub(1).map(|r| cells[r]), count: 1 })
        } else {
            let c = cells[rng.gen_range(0..cells.len())];
            ("remove", UpdateOp::Remove { first: c, last: c })
        };
        let moved = p.counters().moved;
        let before = mem.snapshot_stats();
        p.batch_update(&[op], &mut NoRecalc)?;
        rows.push(Row::new(spec, name, mem.snapshot_stats().since(&before), (p.counters().moved - moved) as f64));
    }
    Ok(rows)
}

/// Uniform random writes; one row per closed epoch plus a final row, each
/// measuring total slot usage at that point.
fn run_persist(spec: &ScenarioSpec) -> Result<Vec<Row>, BenchError> {
    let mem = spec.memory()?;
    let mut pa = PersistentArray::with_memory(spec.n, spec.eps, &mem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::new();
    let mut epoch_start = mem.snapshot_stats();
    for _ in 0..spec.writes {
        let rolled = pa.counters().rollovers;
        pa.write(rng.gen_range(0..spec.n), rng.gen_range(-1_000_000..1_000_000))?;
        if pa.counters().rollovers > rolled {
            let now = mem.snapshot_stats();
            rows.push(Row::new(spec, "epoch", now.since(&epoch_start), pa.total_slots() as f64));
            epoch_start = now;
        }
    }
    rows.push(Row::new(spec, "final", mem.snapshot_stats().since(&epoch_start), pa.total_slots() as f64));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heights_from_sizes() {
        let h = |n| ScenarioSpec::new(Scenario::Search, n).tree_height();
        assert_eq!([h(1), h(2), h(3), h(4096), h(32768), h(40000)], [1, 1, 1, 12, 15, 15]);
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in [Scenario::Search, Scenario::InsertRemove, Scenario::PmaChurn, Scenario::Persist] {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
    }

    #[test]
    fn empty_csv_has_header() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
    }
}

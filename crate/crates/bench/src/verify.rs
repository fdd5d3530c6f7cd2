use std::fmt;
use std::str::FromStr;

use corobts::memory::MemoryHandle;
use corobts::persist::PersistentArray;
use corobts::pma::{NoRecalc, Pma, UpdateOp};
use corobts::tree::{LayoutParams, TreeStore};
use corobts::veb::{veb_permutation_oracle, Eps, ExplicitTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    LayoutOracle,
    PmaDensity,
    PersistOracle,
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        Ok(match s {
            "layout-oracle" => Suite::LayoutOracle,
            "pma-density" => Suite::PmaDensity,
            "persist-oracle" => Suite::PersistOracle,
            other => return Err(BenchError::Usage(format!("unknown suite {other:?}"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::LayoutOracle => "layout-oracle",
            Suite::PmaDensity => "pma-density",
            Suite::PersistOracle => "persist-oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Capacity for `persist-oracle`.
    pub u: usize,
    pub writes: usize,
    /// Damage the structure midway; the suite must then report a counterexample.
    pub inject_corruption: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, u: 64, writes: 2000, inject_corruption: false }
    }
}

/// `Ok(Ok(summary))` on pass, `Ok(Err(counterexample))` on failure.
pub fn verify(suite: Suite, opts: &VerifyOptions) -> Result<Result<String, String>, BenchError> {
    match suite {
        Suite::LayoutOracle => layout_oracle(opts),
        Suite::PmaDensity => pma_density(opts),
        Suite::PersistOracle => persist_oracle(opts),
    }
}

fn layout_oracle(opts: &VerifyOptions) -> Result<Result<String, String>, BenchError> {
    let (a, b) = (2, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sequences = 20;
    for seq in 0..sequences {
        let eps = if seq % 2 == 0 { Eps::QUARTER } else { Eps::HALF };
        let height = rng.gen_range(2..=7);
        let mut t = TreeStore::<()>::init(LayoutParams::new(eps, height, a, b)?, &MemoryHandle::untracked())?;
        let mut reference = ExplicitTree::complete(a, height);
        for step in 0..100 {
            let depth = rng.gen_range(0..height - 1);
            let mut ranks = Vec::new();
            let mut node = reference.root();
            for _ in 0..depth {
                let r = rng.gen_range(0..reference.children(node).len());
                ranks.push(r);
                node = reference.children(node)[r];
            }
            let v = *t.search_path(&ranks)?.last().expect("non-empty path");
            let degree = reference.children(node).len();
            if degree == a || (degree < b && rng.gen_bool(0.5)) {
                let c = rng.gen_range(0..=degree);
                t.insert_subtree(v, c)?;
                reference.insert_complete(node, c, a, height - depth - 1);
            } else {
                let c = rng.gen_range(0..degree);
                t.remove_subtree(v, c)?;
                reference.remove_child(node, c);
            }
            if opts.inject_corruption && seq == 0 && step == 10 {
                let root = t.root();
                let wrong = t.live_cells()[1..].iter().copied().find(|&c| Some(c) != t.child(root, 0).ok()).unwrap_or(root);
                t.corrupt_child(root, 0, wrong as u32);
            }
            let report = t.validate();
            if !report.is_empty() {
                return Ok(Err(format!("sequence {seq} step {step} (eps {eps}, H {height}): {report}")));
            }
            if !t.isomorphic_to(&reference) {
                return Ok(Err(format!("sequence {seq} step {step}: stored shape differs from the reference tree")));
            }
            let (mine, cell_of) = t.to_explicit()?;
            let expected: Vec<usize> = veb_permutation_oracle(&mine, eps)?.iter().map(|&n| cell_of[n]).collect();
            if expected != t.live_cells() {
                return Ok(Err(format!("sequence {seq} step {step}: live order differs from the oracle")));
            }
        }
    }
    Ok(Ok(format!("{sequences} sequences of 100 operations match the oracle")))
}

fn pma_density(opts: &VerifyOptions) -> Result<Result<String, String>, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut p: Pma<u64> = Pma::new(&MemoryHandle::untracked());
    p.batch_update(&[UpdateOp::Insert { after: None, count: 1 << 10 }], &mut NoRecalc)?;
    let steps = 5000;
    for step in 0..steps {
        let cells: Vec<usize> = p.occupied().collect();
        let k = rng.gen_range(1..=4);
        let ops: Vec<UpdateOp> = if cells.len() < 8 || rng.gen_bool(0.5) {
            let mut at: Vec<usize> = (0..k).map(|_| rng.gen_range(0..cells.len())).collect();
            at.sort();
            at.dedup();
            at.into_iter().map(|r| UpdateOp::Insert { after: Some(cells[r]), count: rng.gen_range(1..4) }).collect()
        } else {
            let mut at: Vec<usize> = (0..k).map(|_| rng.gen_range(0..cells.len())).collect();
            at.sort();
            at.dedup();
            at.into_iter().map(|r| UpdateOp::Remove { first: cells[r], last: cells[r] }).collect()
        };
        let plan = p.get_intervals(&ops)?;
        if plan.intervals.len() > ops.len() {
            return Ok(Err(format!("step {step}: {} intervals for a batch of {}", plan.intervals.len(), ops.len())));
        }
        p.batch_update(&ops, &mut NoRecalc)?;
        if opts.inject_corruption && step == 100 {
            // Empty one segment without telling the counters.
            let m = p.segment_size();
            for i in 0..m {
                p.slot_mut(i).occupied = false;
            }
        }
        if let Err(e) = p.check_counts() {
            return Ok(Err(format!("step {step}: {e}")));
        }
        if let Some((node, n)) = p.density_violations().first() {
            return Ok(Err(format!("step {step}: segment-tree node {node} holds {n}, outside its density window")));
        }
    }
    Ok(Ok(format!("{steps} batches kept every node inside its window")))
}

fn persist_oracle(opts: &VerifyOptions) -> Result<Result<String, String>, BenchError> {
    if opts.u < 2 || !opts.u.is_power_of_two() {
        return Err(BenchError::Usage(format!("--u must be a power of two >= 2, got {}", opts.u)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pa = PersistentArray::new(opts.u)?;
    for _ in 0..opts.writes {
        pa.write(rng.gen_range(0..opts.u), rng.gen_range(-1000..1000))?;
    }
    let mut log = pa.log().to_vec();
    if opts.inject_corruption && !log.is_empty() {
        // Compare against a tampered history.
        let k = log.len() / 2;
        log[k].1 = log[k].1.wrapping_add(1);
    }
    let mut cur = vec![0i64; pa.capacity()];
    for v in 0..=log.len() {
        if v > 0 {
            let (i, x) = log[v - 1];
            cur[i] = x;
        }
        for (i, &x) in cur.iter().enumerate() {
            let got = pa.read_persistent(i, v as u64)?;
            if got != x {
                return Ok(Err(format!("cell {i} at version {v}: array says {got}, replay says {x}")));
            }
        }
    }
    Ok(Ok(format!("{} versions x {} cells match the log replay", log.len() + 1, pa.capacity())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        for s in [Suite::LayoutOracle, Suite::PmaDensity, Suite::PersistOracle] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
    }

    #[test]
    fn persist_rejects_bad_capacity() {
        let opts = VerifyOptions { u: 12, ..Default::default() };
        assert!(matches!(verify(Suite::PersistOracle, &opts), Err(BenchError::Usage(_))));
    }
}

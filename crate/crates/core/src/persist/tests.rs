use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::memory::BlockMemoryConfig;

/// Values of every cell after each prefix of `log`.
fn replay(capacity: usize, log: &[(usize, i64)]) -> Vec<Vec<i64>> {
    let width = log.iter().map(|&(i, _)| i + 1).max().unwrap_or(0).max(capacity);
    let mut cur = vec![0; width];
    let mut out = vec![cur.clone()];
    for &(i, x) in log {
        cur[i] = x;
        out.push(cur.clone());
    }
    out
}

fn check_against_oracle(pa: &mut PersistentArray) {
    let versions = replay(pa.capacity(), pa.log());
    for (v, row) in versions.iter().enumerate() {
        for (i, &x) in row.iter().enumerate() {
            assert_eq!(pa.read_persistent(i, v as u64).unwrap(), x, "cell {i} at version {v}");
        }
    }
}

fn check_partition(pa: &PersistentArray) {
    let leaves = pa.leaf_rectangles();
    for v in 0..=pa.version_count() {
        for i in 0..pa.capacity() {
            let n = leaves.iter().filter(|r| r.contains(i, v)).count();
            assert_eq!(n, 1, "({i}, {v}) lies in {n} leaves");
        }
    }
}

#[test]
fn construction() {
    let pa = PersistentArray::new(4).unwrap();
    assert_eq!(pa.top_tree().len(), 7);
    let leaves = pa.leaf_rectangles();
    assert_eq!(leaves.len(), 4);
    assert!(leaves.iter().all(|l| l.width() == 1 && l.is_open() && l.time_lo == 0));
    assert_eq!(PersistentArray::new(2).unwrap().top_tree().len(), 3);
    for bad in [0, 1, 3, 6, 100] {
        assert!(matches!(PersistentArray::new(bad), Err(Error::Domain(_))));
    }
    let mut pa = PersistentArray::new(8).unwrap();
    assert_eq!(pa.snapshot(0).unwrap(), vec![0; 8]);
}

#[test]
fn first_write_expands_the_leaf_parent() {
    let mut pa = PersistentArray::new(4).unwrap();
    assert_eq!(pa.write(2, 7).unwrap(), 1);
    assert_eq!(pa.read_persistent(2, 0).unwrap(), 0);
    assert_eq!(pa.read_persistent(2, 1).unwrap(), 7);
    assert_eq!(pa.read_present(2).unwrap(), 7);
    assert_eq!(pa.read_present(1).unwrap(), 0);
    // The full leaf is closed and its parent gains a leaf above it.
    assert_eq!(pa.counters().gains_by_height, vec![0, 1, 0]);
    assert_eq!(pa.top_tree().len(), 8);
    assert!(pa.full_open_rectangles().is_empty());
    pa.write(2, 8).unwrap();
    assert_eq!(pa.read_present(2).unwrap(), 8);
    check_against_oracle(&mut pa);
}

#[test]
fn sibling_writes_fill_the_parent() {
    let mut pa = PersistentArray::new(4).unwrap();
    pa.write(0, 1).unwrap();
    pa.write(1, 2).unwrap();
    // Both leaves of the left pair are full, so the root gains a third child above the pair.
    assert_eq!(pa.counters().gains_by_height, vec![0, 1, 1]);
    assert_eq!(pa.top_tree().degree(pa.top_tree().root()).unwrap(), 3);
    assert!(pa.full_open_rectangles().is_empty());
    assert!(pa.top_tree().validate().is_empty());
    check_partition(&pa);
    check_against_oracle(&mut pa);
}

#[test]
fn rollover_after_capacity_points() {
    let mut pa = PersistentArray::new(2).unwrap();
    pa.write(0, 5).unwrap();
    pa.write(0, 6).unwrap();
    assert_eq!(pa.bottom_trees().len(), 1);
    assert_eq!(pa.counters().rollovers, 1);
    assert_eq!(pa.leaf_rectangles().iter().filter(|l| l.is_open()).count(), 2);
    check_against_oracle(&mut pa);
    pa.write(1, 7).unwrap();
    pa.write(0, 8).unwrap();
    assert_eq!(pa.bottom_trees().len(), 2);
    check_partition(&pa);
    check_against_oracle(&mut pa);
}

#[test]
fn doubling() {
    let mut pa = PersistentArray::new(2).unwrap();
    pa.double().unwrap();
    assert_eq!(pa.capacity(), 4);
    assert_eq!(pa.snapshot(0).unwrap(), vec![0; 4]);

    let mut pa = PersistentArray::new(2).unwrap();
    pa.write(1, 4).unwrap();
    assert_eq!(pa.write(3, 9).unwrap(), 2);
    assert_eq!(pa.capacity(), 4);
    check_against_oracle(&mut pa);
    pa.write(7, 1).unwrap();
    assert_eq!(pa.capacity(), 8);
    assert_eq!(pa.counters().doublings, 2);
    check_against_oracle(&mut pa);
    check_partition(&pa);
}

#[test]
fn errors() {
    let mut pa = PersistentArray::new(4).unwrap();
    pa.write(1, 1).unwrap();
    assert_eq!(pa.read_persistent(0, 2), Err(Error::FutureVersion { requested: 2, latest: 1 }));
    assert!(matches!(pa.read_present(4), Err(Error::OutOfBounds { .. })));
    assert!(matches!(pa.read_persistent(9, 0), Err(Error::OutOfBounds { .. })));
}

#[test]
fn warm_read_finger_is_cheaper() {
    let mem = MemoryHandle::new(BlockMemoryConfig::new(8, 4).unwrap());
    let mut pa = PersistentArray::with_memory(1024, Eps::HALF, &mem).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        pa.write(rng.gen_range(0..1024), rng.gen()).unwrap();
    }
    let v = pa.version_count() - 5;
    let cold = |pa: &mut PersistentArray| {
        mem.flush_cache();
        let before = mem.snapshot_stats();
        let x = pa.read_persistent(700, v).unwrap();
        (x, mem.snapshot_stats().since(&before).transfers)
    };
    let (x1, t1) = cold(&mut pa);
    let (x2, t2) = cold(&mut pa);
    assert_eq!(x1, x2);
    assert!(t2 < t1, "warm {t2} vs cold {t1}");
}

#[test]
fn log_and_snapshot_text() {
    let mut pa = PersistentArray::new(4).unwrap();
    for (i, x) in [(0, 3), (3, -4), (0, 5)] {
        pa.write(i, x).unwrap();
    }
    let text = pa.export_log();
    assert_eq!(text, "0,3\n3,-4\n0,5\n");
    let log = parse_log(&text).unwrap();
    let mut again = PersistentArray::from_log(4, &log).unwrap();
    assert_eq!(again.snapshot(2).unwrap(), pa.snapshot(2).unwrap());

    let snap = pa.export_snapshot(2).unwrap();
    let rows = parse_snapshot(&snap).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3], SnapshotRow { version: 2, cell: 3, value: -4 });
    assert_eq!(rows[0].value, 3);

    assert!(matches!(parse_log("1,2,3"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_log("1,2\nx,2"), Err(Error::Parse { line: 2, .. })));
    assert!(parse_snapshot("0,1").is_err());
}

fn random_run(seed: u64, capacity: usize, writes: usize, span: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pa = PersistentArray::new(capacity).unwrap();
    for _ in 0..writes {
        pa.write(rng.gen_range(0..span), rng.gen_range(-100..100)).unwrap();
        assert!(pa.full_open_rectangles().is_empty());
    }
    assert!(pa.top_tree().validate().is_empty(), "{}", pa.top_tree().validate());
    check_partition(&pa);
    check_against_oracle(&mut pa);
}

#[test]
fn random_runs() {
    for seed in 0..8 {
        random_run(seed, 8, 100, 8);
        random_run(seed, 4, 60, 12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oracle_equivalence(seed in any::<u64>(), log_u in 1u32..6, writes in 0usize..150, grow in any::<bool>()) {
        let capacity = 1usize << log_u;
        random_run(seed, capacity, writes, if grow { capacity * 3 } else { capacity });
    }
}

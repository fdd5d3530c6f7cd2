use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::FingerState;
use crate::veb::{veb_permutation_oracle, ExplicitTree};

fn store(eps: Eps, height: usize, a: usize, b: usize) -> TreeStore<u64> {
    TreeStore::init(LayoutParams::new(eps, height, a, b).unwrap(), &MemoryHandle::untracked()).unwrap()
}

fn layout_matches(t: &TreeStore<u64>, reference: &ExplicitTree) {
    let (mine, cell_of) = t.to_explicit().unwrap();
    assert!(mine.isomorphic(reference), "shape differs from the reference tree");
    let order = veb_permutation_oracle(&mine, t.params().eps).unwrap();
    let expected: Vec<usize> = order.iter().map(|&n| cell_of[n]).collect();
    assert_eq!(t.live_cells(), expected);
}

#[test]
fn init_shapes() {
    let t = store(Eps::HALF, 1, 2, 3);
    assert_eq!(t.len(), 1);
    assert!(t.validate().is_empty());

    let t = store(Eps::HALF, 4, 2, 3);
    assert_eq!(t.len(), 15);
    assert!(t.validate().is_empty(), "{}", t.validate());
    layout_matches(&t, &ExplicitTree::complete(2, 4));

    let t = store(Eps::THIRD, 3, 3, 5);
    assert_eq!(t.len(), 13);
    assert!(t.validate().is_empty());
}

#[test]
fn full_builds_match_oracle() {
    for eps in [Eps::QUARTER, Eps::THIRD, Eps::HALF] {
        for a in 2..=3 {
            for height in 1..=7 {
                let t = store(eps, height, a, a + 1);
                layout_matches(&t, &ExplicitTree::complete(a, height));
                assert!(t.validate().is_empty());
            }
        }
    }
}

#[test]
fn interval_sizes() {
    let t = store(Eps::HALF, 4, 2, 3);
    assert_eq!(t.new_subtree_interval_sizes(1).unwrap(), vec![1, 6]);
    assert_eq!(t.new_subtree_interval_sizes(0).unwrap(), vec![15]);
    assert_eq!(t.new_subtree_interval_sizes(3).unwrap(), vec![1]);
    assert!(t.new_subtree_interval_sizes(4).is_err());
    for eps in [Eps::QUARTER, Eps::THIRD, Eps::HALF] {
        for a in 2..=4 {
            let h = HTable::build(20, eps).unwrap();
            for d in 0..20 {
                let sizes = new_subtree_interval_sizes(&h, a, d).unwrap();
                assert_eq!(sizes.iter().sum::<usize>(), ary_subtree_size(a, 20 - d).unwrap());
            }
        }
    }
}

#[test]
fn interval_walks() {
    let t = store(Eps::HALF, 4, 2, 3);
    let root = t.root();
    let v = t.child(root, 0).unwrap();
    let c = t.child(v, 0).unwrap();
    let rightmost_leaf = t.child(t.child(v, 1).unwrap(), 1).unwrap();
    assert_eq!(t.subtree_intervals_beginnings(v).unwrap(), vec![v, c]);
    assert_eq!(t.subtree_intervals_ends(v).unwrap(), vec![v, rightmost_leaf]);

    let leaf = t.search_path(&[1, 1, 0]).unwrap()[3];
    assert_eq!(t.subtree_intervals_beginnings(leaf).unwrap(), vec![leaf]);
    assert_eq!(t.subtree_intervals_ends(leaf).unwrap(), vec![leaf]);

    let live = t.live_cells();
    assert_eq!(t.subtree_intervals_beginnings(root).unwrap(), vec![live[0]]);
    assert_eq!(t.subtree_intervals_ends(root).unwrap(), vec![*live.last().unwrap()]);
}

#[test]
fn third_child_under_root() {
    let mut t = store(Eps::HALF, 4, 2, 3);
    let root = t.root();
    let w = t.insert_subtree(root, 2).unwrap();
    assert_eq!(t.len(), 15 + 7);
    assert_eq!(t.degree(t.root()).unwrap(), 3);
    assert_eq!(t.child(t.root(), 2).unwrap(), w);
    assert!(t.validate().is_empty(), "{}", t.validate());

    // The second interval of the new subtree holds [c0, leaf, leaf, c1, leaf, leaf].
    let begins = t.subtree_intervals_beginnings(w).unwrap();
    assert_eq!(begins.len(), 2);
    let live = t.live_cells();
    let at = live.iter().position(|&c| c == begins[1]).unwrap();
    assert_eq!(t.child(w, 0).unwrap(), live[at]);
    assert_eq!(t.child(w, 1).unwrap(), live[at + 3]);

    let mut reference = ExplicitTree::complete(2, 4);
    reference.insert_complete(reference.root(), 2, 2, 3);
    layout_matches(&t, &reference);
}

#[test]
fn insert_then_remove_round_trips() {
    for c in 0..=2 {
        let mut t = store(Eps::HALF, 5, 2, 3);
        let v = t.search_path(&[1]).unwrap()[1];
        t.insert_subtree(v, c).unwrap();
        assert!(t.validate().is_empty(), "{}", t.validate());
        let v = t.search_path(&[1]).unwrap()[1];
        t.remove_subtree(v, c).unwrap();
        assert!(t.validate().is_empty(), "{}", t.validate());
        layout_matches(&t, &ExplicitTree::complete(2, 5));
    }
}

#[test]
fn removing_middle_child() {
    let mut t = store(Eps::HALF, 4, 2, 3);
    let root = t.root();
    t.insert_subtree(root, 1).unwrap();
    let before = t.len();
    let root = t.root();
    t.remove_subtree(root, 1).unwrap();
    assert_eq!(t.degree(t.root()).unwrap(), 2);
    assert_eq!(before - t.len(), ary_subtree_size(2, 3).unwrap());
    assert!(t.validate().is_empty());
}

#[test]
fn faults() {
    let mut t = store(Eps::HALF, 4, 2, 3);
    let root = t.root();
    assert!(matches!(t.remove_subtree(root, 0), Err(Error::Degree { .. })));
    let leaf = t.search_path(&[0, 0, 0]).unwrap()[3];
    assert!(matches!(t.insert_subtree(leaf, 0), Err(Error::Height { .. })));
    t.insert_subtree(root, 0).unwrap();
    let root = t.root();
    assert!(matches!(t.insert_subtree(root, 0), Err(Error::Degree { .. })));
    assert!(matches!(t.search_path(&[5]), Err(Error::Navigation { .. })));
    assert!(matches!(t.descend(&[0, 2]), Err(Error::Navigation { .. })));
    let blank = (0..t.pma().size()).find(|&i| !t.pma().cells()[i].occupied).unwrap();
    assert!(matches!(t.insert_subtree(blank, 0), Err(Error::Precondition(_))));
    assert!(t.validate().is_empty());
}

#[test]
fn descend_fingers() {
    let mut t = store(Eps::HALF, 4, 2, 3);
    let f = t.descend(&[]).unwrap();
    assert_eq!(t.finger_vertex(f).unwrap(), t.root());
    let leftmost = t.descend(&[0, 0, 0]).unwrap();
    let min_leaf = t.live_cells().into_iter().filter(|&c| t.depth(c).unwrap() == 3).min().unwrap();
    assert_eq!(t.finger_vertex(leftmost).unwrap(), min_leaf);

    let deep = t.descend(&[1, 1, 1]).unwrap();
    let extra = t.descend(&[0, 1]).unwrap();
    for _ in 0..3 {
        let root = t.root();
        t.insert_subtree(root, 0).ok();
        let v = t.search_path(&[0]).unwrap()[1];
        t.insert_subtree(v, 1).unwrap();
        assert_eq!(t.finger_vertex(deep).unwrap(), t.search_path(&[t.degree(t.root()).unwrap() - 1, 1, 1]).unwrap()[3]);
        assert_eq!(t.finger_path(deep).unwrap(), &t.search_path(&[t.degree(t.root()).unwrap() - 1, 1, 1]).unwrap()[..]);
        let v = t.search_path(&[0]).unwrap()[1];
        t.remove_subtree(v, 1).unwrap();
    }
    let degree = t.degree(t.root()).unwrap();
    assert_eq!(t.finger_vertex(extra).unwrap(), t.search_path(&[degree - 2, 1]).unwrap()[2]);
    let five = t.descend(&[0]);
    assert!(matches!(five, Err(Error::FingerCapacity(4))));
    t.release_finger(f).unwrap();
    assert_eq!(t.finger_vertex(f), Err(Error::InvalidFinger(FingerState::Released)));
}

#[test]
fn finger_into_removed_subtree_detaches() {
    let mut t = store(Eps::HALF, 4, 2, 3);
    let root = t.root();
    t.insert_subtree(root, 2).unwrap();
    let f = t.descend(&[2, 1]).unwrap();
    let keep = t.descend(&[1, 0, 1]).unwrap();
    let root = t.root();
    t.remove_subtree(root, 2).unwrap();
    assert_eq!(t.finger_vertex(f), Err(Error::InvalidFinger(FingerState::Detached)));
    assert_eq!(t.finger_vertex(keep).unwrap(), t.search_path(&[1, 0, 1]).unwrap()[3]);
}

#[test]
fn recalc_whole_array_restates_every_edge() {
    let mut t = store(Eps::HALF, 5, 2, 3);
    let live = t.live_cells();
    let (changes, stats) = t.dry_recalculate(0, t.pma().size() - 1, false).unwrap();
    let got: BTreeSet<(u32, u8, u32)> = changes.iter().map(|c| (c.parent, c.rank, c.child)).collect();
    let mut want = BTreeSet::new();
    for &v in &live {
        for r in 0..t.degree(v).unwrap() {
            want.insert((v as u32, r as u8, t.child(v, r).unwrap() as u32));
        }
    }
    assert_eq!(changes.len(), live.len() - 1);
    assert_eq!(got, want);
    assert!(stats.visits as usize >= live.len());
}

#[test]
fn recalc_single_leaf() {
    let mut t = store(Eps::HALF, 5, 2, 3);
    let path = t.search_path(&[1, 0, 1, 1]).unwrap();
    let leaf = path[4];
    let (changes, _) = t.dry_recalculate(leaf, leaf, false).unwrap();
    assert_eq!(changes, vec![Change { parent: path[3] as u32, rank: 1, child: leaf as u32 }]);
}

#[test]
fn recalc_stays_above_the_interval_bottom() {
    let mut t = store(Eps::HALF, 8, 2, 3);
    // A decomposition subtree of height 4 rooted at depth 4 is one contiguous run.
    let v = t.search_path(&[1, 0, 1, 1]).unwrap()[4];
    let begins = t.subtree_intervals_beginnings(v).unwrap();
    let ends = t.subtree_intervals_ends(v).unwrap();
    assert_eq!(begins.len(), 1);
    let (changes, stats) = t.dry_recalculate(begins[0], ends[0], true).unwrap();
    assert_eq!(changes.len(), ary_subtree_size(2, 4).unwrap());
    let log = stats.log.unwrap();
    let bottom = log.iter().filter(|&&c| (begins[0]..=ends[0]).contains(&c)).map(|&c| t.depth(c).unwrap()).max().unwrap();
    assert!(log.iter().all(|&c| t.depth(c).unwrap() <= bottom));
}

/// Mirrors random subtree inserts/removes on a reference tree.
fn random_ops(seed: u64, eps: Eps, height: usize, (a, b): (usize, usize), ops: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = store(eps, height, a, b);
    let mut reference = ExplicitTree::complete(a, height);
    for step in 0..ops {
        if height < 2 {
            break;
        }
        let depth = rng.gen_range(0..height - 1);
        let mut ranks = Vec::new();
        let mut node = reference.root();
        for _ in 0..depth {
            let r = rng.gen_range(0..reference.children(node).len());
            ranks.push(r);
            node = reference.children(node)[r];
        }
        let v = *t.search_path(&ranks).unwrap().last().unwrap();
        let degree = reference.children(node).len();
        let grow = degree == a || (degree < b && rng.gen_bool(0.5));
        if grow {
            let c = rng.gen_range(0..=degree);
            t.insert_subtree(v, c).unwrap();
            reference.insert_complete(node, c, a, height - depth - 1);
        } else {
            let c = rng.gen_range(0..degree);
            t.remove_subtree(v, c).unwrap();
            reference.remove_child(node, c);
        }
        let report = t.validate();
        assert!(report.is_empty(), "step {step}: {report}");
        layout_matches(&t, &reference);
    }
}

#[test]
fn random_sequences_small() {
    for seed in 0..20 {
        random_ops(seed, if seed % 2 == 0 { Eps::HALF } else { Eps::QUARTER }, 2 + (seed as usize % 5), (2, 4), 40);
    }
}

#[test]
fn validate_reports_corruption() {
    let mut t = store(Eps::HALF, 4, 2, 3);
    let root = t.root();
    let blank = (0..t.pma().size()).find(|&i| !t.pma().cells()[i].occupied).unwrap();
    t.corrupt_child(root, 0, blank as u32);
    let report = t.validate();
    assert!(report.violations.iter().any(|v| matches!(v, Violation::DanglingChild { .. })), "{report}");
}

#[test]
fn dump_round_trip() {
    let mut t = store(Eps::HALF, 3, 2, 3);
    let leaf = t.search_path(&[1, 0]).unwrap()[2];
    *t.payload_mut(leaf).unwrap() = 0xabcd;
    let text = t.dump();
    let rows = parse_tree_dump(&text).unwrap();
    assert_eq!(rows.len(), 7);
    let row = rows.iter().find(|r| r.cell == leaf).unwrap();
    assert_eq!(row.payload, 0xabcdu64.to_be_bytes().to_vec());
    assert!(t.isomorphic_to(&rows_to_explicit(&rows).unwrap()));
    assert!(parse_tree_dump("0,0,1;2\n").is_err());
    assert!(parse_tree_dump("3,0,,00\n1,1,,00\n").is_err());
    assert!(parse_tree_dump("0,0,,zz\n").is_err());
    assert!(rows_to_explicit(&parse_tree_dump("0,0,5,00\n").unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_sequences(
        seed in any::<u64>(),
        eps in prop::sample::select(vec![Eps::HALF, Eps::THIRD, Eps::QUARTER]),
        height in 2usize..9,
        arity in prop::sample::select(vec![(2, 3), (2, 4), (3, 5), (4, 8)]),
    ) {
        let height = if arity.0 > 2 { height.min(5) } else { height };
        random_ops(seed, eps, height, arity, 30);
    }
}

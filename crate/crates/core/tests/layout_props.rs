use corobts::memory::MemoryHandle;
use corobts::pma::{dump_cells, parse_dump, NoRecalc, Pma, UpdateOp};
use corobts::tree::{parse_tree_dump, rows_to_explicit, LayoutParams, TreeStore};
use corobts::veb::{ary_subtree_size, cut_height, veb_permutation_oracle, Eps, ExplicitTree, HTable};
use proptest::prelude::*;

fn eps() -> impl Strategy<Value = Eps> {
    (2u32..=8).prop_flat_map(|den| (1..=den / 2).prop_map(move |num| Eps::new(num, den).unwrap()))
}

proptest! {
    #[test]
    fn htable_recurrence(height in 1usize..200, eps in eps()) {
        let h = HTable::build(height, eps).unwrap();
        prop_assert!(h.check().is_ok());
        prop_assert_eq!(h[0], height);
        for d in 0..height {
            prop_assert!(h[d] >= 1 && d + h[d] <= height);
        }
        if height >= 2 {
            let c = cut_height(height, eps).unwrap();
            prop_assert!(c >= 1 && c < height);
        } else {
            prop_assert!(cut_height(height, eps).is_err());
        }
    }

    #[test]
    fn complete_store_is_oracle_ordered(height in 1usize..8, a in 2usize..4, eps in eps()) {
        let t = TreeStore::<u8>::init(LayoutParams::new(eps, height, a, a + 1).unwrap(), &MemoryHandle::untracked()).unwrap();
        prop_assert_eq!(t.len(), ary_subtree_size(a, height).unwrap());
        let (tree, cell_of) = t.to_explicit().unwrap();
        let order = veb_permutation_oracle(&tree, eps).unwrap();
        let expected: Vec<usize> = order.iter().map(|&n| cell_of[n]).collect();
        prop_assert_eq!(t.live_cells(), expected);
        prop_assert!(t.validate().is_empty());
    }

    #[test]
    fn oracle_is_a_permutation(height in 1usize..7, eps in eps(), cuts in prop::collection::vec((any::<prop::sample::Index>(), 0usize..3), 0..6)) {
        let mut tree = ExplicitTree::complete(2, height);
        // Grow some vertices to degree 3 to make the shape irregular.
        for (pick, rank) in cuts {
            let internal: Vec<usize> = (0..tree.id_bound()).filter(|&v| tree.is_alive(v) && !tree.children(v).is_empty()).collect();
            if internal.is_empty() {
                break;
            }
            let v = internal[pick.index(internal.len())];
            if tree.children(v).len() < 3 {
                let depth_left = tree.uniform_height().unwrap();
                let d = depth_of(&tree, v);
                tree.insert_complete(v, rank.min(tree.children(v).len()), 2, depth_left - d - 1);
            }
        }
        let mut order = veb_permutation_oracle(&tree, eps).unwrap();
        prop_assert_eq!(order[0], tree.root());
        order.sort();
        let mut alive: Vec<usize> = (0..tree.id_bound()).filter(|&v| tree.is_alive(v)).collect();
        alive.sort();
        prop_assert_eq!(order, alive);
    }
}

fn depth_of(tree: &ExplicitTree, v: usize) -> usize {
    let mut stack = vec![(tree.root(), 0)];
    while let Some((u, d)) = stack.pop() {
        if u == v {
            return d;
        }
        stack.extend(tree.children(u).iter().map(|&c| (c, d + 1)));
    }
    unreachable!("vertex {v} not in the tree")
}

#[test]
fn htable_examples() {
    assert_eq!(HTable::build(4, Eps::HALF).unwrap().as_slice(), &[4, 1, 2, 1]);
    assert_eq!(HTable::build(8, Eps::HALF).unwrap().as_slice(), &[8, 1, 2, 1, 4, 1, 2, 1]);
}

#[test]
fn dumps_round_trip() {
    let mut p: Pma<u8> = Pma::new(&MemoryHandle::untracked());
    p.batch_update(&[UpdateOp::Insert { after: None, count: 5 }], &mut NoRecalc).unwrap();
    let text = dump_cells(p.cells(), 8);
    let rows = parse_dump(&text, 8).unwrap();
    assert_eq!(rows.len(), p.size());
    assert_eq!(rows.iter().filter(|r| r.occupied).count(), 5);

    let t = TreeStore::<u8>::init(LayoutParams::new(Eps::HALF, 4, 2, 3).unwrap(), &MemoryHandle::untracked()).unwrap();
    let tree = rows_to_explicit(&parse_tree_dump(&t.dump()).unwrap()).unwrap();
    assert!(tree.isomorphic(&ExplicitTree::complete(2, 4)));
}

#![no_main]

use arbitrary::Arbitrary;
use corobts::memory::MemoryHandle;
use corobts::tree::{LayoutParams, TreeStore};
use corobts::veb::Eps;
use libfuzzer_sys::fuzz_target;

#[derive(Debug, Arbitrary)]
enum Op {
    Insert { path: Vec<u8>, rank: u8 },
    Remove { path: Vec<u8>, rank: u8 },
}

#[derive(Debug, Arbitrary)]
struct Input {
    height: u8,
    quarter: bool,
    ops: Vec<Op>,
}

fuzz_target!(|input: Input| {
    let height = 1 + input.height as usize % 6;
    let eps = if input.quarter { Eps::QUARTER } else { Eps::HALF };
    let mut t = TreeStore::<u16>::init(LayoutParams::new(eps, height, 2, 4).unwrap(), &MemoryHandle::untracked()).unwrap();
    for op in input.ops.iter().take(64) {
        let (path, rank, insert) = match op {
            Op::Insert { path, rank } => (path, rank, true),
            Op::Remove { path, rank } => (path, rank, false),
        };
        let mut v = t.root();
        for &r in path.iter().take(height) {
            let d = t.degree(v).unwrap();
            if d == 0 {
                break;
            }
            v = t.child(v, r as usize % d).unwrap();
        }
        // Faults are fine; they must leave the store intact.
        let _ = if insert { t.insert_subtree(v, *rank as usize % 5).map(|_| ()) } else { t.remove_subtree(v, *rank as usize % 5) };
        let report = t.validate();
        assert!(report.is_empty(), "{report}");
    }
});

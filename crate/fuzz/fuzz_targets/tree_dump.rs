#![no_main]

use corobts::tree::{parse_tree_dump, rows_to_explicit};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_tree_dump(text) {
        if let Ok(tree) = rows_to_explicit(&rows) {
            assert_eq!(tree.len(), rows.len());
        }
    }
});

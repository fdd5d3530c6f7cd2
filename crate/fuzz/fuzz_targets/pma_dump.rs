#![no_main]

use corobts::pma::parse_dump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_dump(text, 8) {
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.index, i);
            assert!(r.children.len() <= 8);
        }
    }
});

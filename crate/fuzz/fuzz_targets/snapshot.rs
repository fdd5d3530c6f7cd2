#![no_main]

use corobts::persist::parse_snapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_snapshot(text) {
        let again: String = rows.iter().map(|r| format!("{},{},{}\n", r.version, r.cell, r.value)).collect();
        assert_eq!(parse_snapshot(&again).unwrap(), rows);
    }
});

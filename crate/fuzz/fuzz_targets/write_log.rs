#![no_main]

use corobts::persist::{parse_log, PersistentArray};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(log) = parse_log(text) else { return };
    if log.len() > 512 || log.iter().any(|&(i, _)| i >= 256) {
        return;
    }
    let mut pa = PersistentArray::from_log(2, &log).unwrap();
    let mut cur = vec![0i64; pa.capacity()];
    for (v, &(i, x)) in log.iter().enumerate() {
        cur[i] = x;
        for (j, &y) in cur.iter().enumerate() {
            assert_eq!(pa.read_persistent(j, v as u64 + 1).unwrap(), y);
        }
    }
    assert_eq!(parse_log(&pa.export_log()).unwrap(), log);
});

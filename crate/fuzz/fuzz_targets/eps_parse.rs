#![no_main]

use corobts::veb::{Eps, HTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(eps) = text.parse::<Eps>() {
        assert_eq!(eps.to_string().parse::<Eps>().unwrap(), eps);
        let h = HTable::build(40, eps).unwrap();
        h.check().unwrap();
    }
});

#![no_main]

use corobts::persist::StNode;
use corobts::tree::Payload;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Some(node) = StNode::from_bytes(data) {
        assert_eq!(node.to_bytes(), data);
    }
});

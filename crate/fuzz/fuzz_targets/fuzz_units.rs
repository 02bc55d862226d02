#![no_main]

use cohere_twin::units::{parse_length, parse_time};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        // must never panic; a successful parse must be finite
        if let Ok(v) = parse_length(s) {
            assert!(v.is_finite());
        }
        if let Ok(v) = parse_time(s) {
            assert!(v.is_finite());
        }
    }
});

#![no_main]

use cohere_twin::cli::resolve_plan;
use libfuzzer_sys::fuzz_target;

// first line: override spec, rest: config JSON
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let (spec, config) = s.split_once('\n').unwrap_or(("", s));
        let overrides = if spec.is_empty() {
            Vec::new()
        } else {
            vec![spec.to_string()]
        };
        let _ = resolve_plan(config, &overrides);
    }
});

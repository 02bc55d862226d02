#![no_main]

use cohere_twin::scan::load_dataset;
use libfuzzer_sys::fuzz_target;

// layout: u16 LE sidecar length, sidecar JSON bytes, CSV bytes
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let split = u16::from_le_bytes([data[0], data[1]]) as usize;
    let rest = &data[2..];
    if split > rest.len() {
        return;
    }
    let (sidecar, csv) = rest.split_at(split);
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("d");
    std::fs::write(base.with_extension("json"), sidecar).unwrap();
    std::fs::write(base.with_extension("csv"), csv).unwrap();
    // must never panic; errors are the expected outcome for junk input
    let _ = load_dataset(&base);
});

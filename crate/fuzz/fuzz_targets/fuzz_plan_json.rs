#![no_main]

use cohere_twin::scan::ScanPlan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(plan) = serde_json::from_str::<ScanPlan>(s) {
            // validation must never panic, and an accepted plan must
            // survive a serialize -> deserialize round trip unchanged
            if plan.validate().is_ok() {
                let text = serde_json::to_string(&plan).unwrap();
                let back: ScanPlan = serde_json::from_str(&text).unwrap();
                assert_eq!(plan, back);
            }
        }
    }
});

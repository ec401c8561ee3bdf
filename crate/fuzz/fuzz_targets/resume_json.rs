//! Fuzz the JSON readers used by crash-resume and the bbar_0 cache.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 256 * 1024 {
        return;
    }
    if let Ok(rec) = serde_json::from_slice::<cavg::harness::PathRecord>(data) {
        let _ = serde_json::to_vec(&rec);
    }
    let _ = serde_json::from_slice::<Vec<cavg::averaged::CacheEntry>>(data);
    let _ = serde_json::from_slice::<cavg::harness::SweepResult>(data);
    if let Ok(text) = std::str::from_utf8(data) {
        for line in text.lines().take(64) {
            let _ = serde_json::from_str::<cavg::monitor::StepRecord>(line);
        }
    }
});

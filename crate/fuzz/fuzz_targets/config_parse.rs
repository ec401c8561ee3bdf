//! Fuzz the TOML run-config parser and its validation pass.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = cavg::config::SimConfig::from_toml_str(text) {
            // validation must never panic, whatever the field values
            let _ = cfg.validate();
            let _ = cfg.to_toml_string();
        }
        let _ = cavg::harness::ExperimentPlan::from_toml_str(text);
    }
});

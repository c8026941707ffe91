#![no_main]

use libfuzzer_sys::fuzz_target;
use lyapchain::config::{apply_override, parse_override, ExperimentConfig};

const BASE: &str = r#"{
  "chain": {"m": 11, "period": 3, "omega_pattern": [1.5, 0.75, 0.75], "coupling_pattern": [0.15, 1.0, 1.0]},
  "experiment": {"kind": "transfer"}
}"#;

// One `key.path=value` override per line, applied in order.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut doc: serde_json::Value = serde_json::from_str(BASE).unwrap();
    for line in text.lines() {
        if parse_override(line).is_ok() {
            let _ = apply_override(&mut doc, line);
        } else {
            assert!(apply_override(&mut doc.clone(), line).is_err());
        }
    }
    let _ = ExperimentConfig::from_value(doc);
});

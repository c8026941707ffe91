#![no_main]

use libfuzzer_sys::fuzz_target;
use lyapchain::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_json_str(text) {
        let again = ExperimentConfig::from_value(config.canonical()).unwrap();
        assert_eq!(again.hash(), config.hash());
    }
});

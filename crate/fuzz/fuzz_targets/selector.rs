#![no_main]

use libfuzzer_sys::fuzz_target;
use lyapchain::robustness::ParameterSelector;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(selector) = text.parse::<ParameterSelector>() {
        assert_eq!(selector.to_string().parse::<ParameterSelector>().unwrap(), selector);
    }
});

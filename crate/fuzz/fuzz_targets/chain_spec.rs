#![no_main]

use libfuzzer_sys::fuzz_target;
use lyapchain::chain::ChainSpec;
use lyapchain::spectral::eigendecompose;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<ChainSpec>(data) else {
        return;
    };
    // accepted specs serialize back to an equal spec
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<ChainSpec>(&text).unwrap(), spec);
    if spec.m() <= 256 {
        let h = spec.hamiltonian();
        if let Ok(dec) = eigendecompose(&h) {
            assert_eq!(dec.dim(), spec.m());
        }
    }
});

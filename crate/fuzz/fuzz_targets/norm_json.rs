#![no_main]
use libfuzzer_sys::fuzz_target;

use arakelov_core::norm::NormSpec;
use arakelov_core::ring::RingRegistry;

fuzz_target!(|data: &[u8]| {
    let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) else { return };
    let mut rings = RingRegistry::new();
    if let Ok(norm) = NormSpec::from_json(&v, &mut rings) {
        let again = NormSpec::from_json(&norm.to_json(), &mut rings).expect("re-parse");
        assert_eq!(norm, again);
    }
});

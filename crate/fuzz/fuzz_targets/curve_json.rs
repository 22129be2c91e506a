#![no_main]
use libfuzzer_sys::fuzz_target;

use arakelov_core::curve::NormedInvertibleModule;
use arakelov_core::ring::RingRegistry;

fuzz_target!(|data: &[u8]| {
    let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) else { return };
    let mut rings = RingRegistry::new();
    if let Ok(l) = NormedInvertibleModule::from_json(&v, &mut rings) {
        let again = NormedInvertibleModule::from_json(&l.to_json(), &mut rings).expect("re-parse");
        assert_eq!(l, again);
    }
});

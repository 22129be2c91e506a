#![no_main]
use libfuzzer_sys::fuzz_target;

use arakelov_core::ring::RingRegistry;

fuzz_target!(|data: &str| {
    if let Ok(ring) = RingRegistry::new().resolve(data) {
        let (r, s) = ring.signature();
        assert_eq!(r + 2 * s, ring.degree());
    }
});

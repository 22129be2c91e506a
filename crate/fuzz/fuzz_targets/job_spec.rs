#![no_main]
use libfuzzer_sys::fuzz_target;

use arakelov_cli::JobSpec;

fuzz_target!(|data: &str| {
    if let Ok(spec) = JobSpec::parse(data) {
        let text = serde_json::to_string(&spec).unwrap();
        let again = JobSpec::parse(&text).expect("re-parse");
        assert_eq!(spec.digest(), again.digest());
    }
});

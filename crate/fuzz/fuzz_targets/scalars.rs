#![no_main]
use libfuzzer_sys::fuzz_target;

use arakelov_core::norm::LogWeight;
use arakelov_core::rational::{parse_q, q_to_string};

fuzz_target!(|data: &str| {
    if let Ok(x) = parse_q(data) {
        assert_eq!(parse_q(&q_to_string(&x)).unwrap(), x);
    }
    if let Ok(w) = LogWeight::parse(data) {
        assert_eq!(LogWeight::from_json(&w.to_json()).unwrap(), w);
    }
});

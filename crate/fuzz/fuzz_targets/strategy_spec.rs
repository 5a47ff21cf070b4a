#![no_main]

use futurecone::strategies::parse_strategy_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kind) = parse_strategy_spec(text) {
        assert!(kind.validated().is_ok());
    }
});

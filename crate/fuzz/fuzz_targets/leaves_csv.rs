#![no_main]

use futurecone::tables::read_leaves;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_leaves(data) {
        assert!(rows.iter().all(|r| r.time.is_finite()));
    }
});

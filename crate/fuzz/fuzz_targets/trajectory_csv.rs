#![no_main]

use futurecone::tables::read_trajectory;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_trajectory(data) {
        assert!(rows.iter().all(|r| r.separation.is_finite()));
    }
});

#![no_main]

use futurecone::scenario::ScenarioFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sc) = ScenarioFile::from_json_str(text) {
        // Anything accepted must survive a round trip.
        let again = ScenarioFile::from_json_str(&sc.to_json_pretty()).expect("re-parse");
        assert_eq!(sc, again);
    }
});

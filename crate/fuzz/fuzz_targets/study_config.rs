#![no_main]

use canonpose::lift::LiftingStudyConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = LiftingStudyConfig::from_json_str(text);
    }
});

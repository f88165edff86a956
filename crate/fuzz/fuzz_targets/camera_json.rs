#![no_main]

use canonpose::Camera;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(camera) = Camera::from_json_str(text) {
        let again = Camera::from_json_str(&camera.to_json_string()).expect("own output parses");
        assert_eq!(again.intrinsics, camera.intrinsics);
    }
});

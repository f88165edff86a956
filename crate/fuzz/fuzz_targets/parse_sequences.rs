//! NDJSON pose files: parsing must never panic, and anything that parses
//! must survive a write/parse round trip unchanged.

#![no_main]

use canonpose::dataset::{parse_sequences, write_sequences, Skeleton};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let skeleton = Skeleton::h36m17();
    if let Ok(seqs) = parse_sequences(text, &skeleton) {
        let written = write_sequences(&seqs, &skeleton).expect("one file has one frame rate");
        let again = parse_sequences(&written, &skeleton).expect("own output parses");
        assert_eq!(again, seqs);
    }
});

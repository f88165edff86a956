//! Replays the fuzz corpus seeds through the same checks the fuzz targets
//! run, so the seeds stay meaningful without a nightly toolchain.

use std::path::PathBuf;

use canonpose::dataset::{parse_sequences, write_sequences, Skeleton};
use canonpose::lift::LiftingStudyConfig;
use canonpose::synth::SynthConfig;
use canonpose::Camera;

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

fn expect(target: &str, invalid: &[&str], parse: impl Fn(&str) -> bool) {
    let seeds = corpus(target);
    assert!(!seeds.is_empty());
    for (name, text) in seeds {
        let ok = parse(&text);
        assert_eq!(ok, !invalid.contains(&name.as_str()), "{target}/{name}");
    }
}

#[test]
fn pose_file_seeds() {
    let skeleton = Skeleton::h36m17();
    expect("parse_sequences", &["bad_header", "wrong_joint_count"], |text| {
        match parse_sequences(text, &skeleton) {
            Ok(seqs) => {
                let written = write_sequences(&seqs, &skeleton).unwrap();
                assert_eq!(parse_sequences(&written, &skeleton).unwrap(), seqs);
                true
            }
            Err(_) => false,
        }
    });
}

#[test]
fn camera_seeds() {
    expect("camera_json", &["not_a_rotation", "zero_focal"], |text| {
        match Camera::from_json_str(text) {
            Ok(camera) => {
                assert_eq!(Camera::from_json_str(&camera.to_json_string()).unwrap(), camera);
                true
            }
            Err(_) => false,
        }
    });
}

#[test]
fn study_config_seeds() {
    expect("study_config", &["too_shallow"], |text| {
        LiftingStudyConfig::from_json_str(text).is_ok()
    });
}

#[test]
fn synth_config_seeds() {
    expect("synth_config", &["zero_poses"], |text| SynthConfig::from_json_str(text).is_ok());
}

/// Byte-level mutations of every seed: the parsers may reject them but must
/// not panic, and accepted pose files must still round-trip.
#[test]
fn mutated_seeds_do_not_panic() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let skeleton = Skeleton::h36m17();
    let alphabet = b"{}[]\",:.-+e0123456789 \nnulltruefalse\\u";
    for target in ["parse_sequences", "camera_json", "study_config", "synth_config"] {
        for (_, seed) in corpus(target) {
            for _ in 0..300 {
                let mut bytes = seed.clone().into_bytes();
                for _ in 0..rng.random_range(1..6) {
                    let at = rng.random_range(0..bytes.len());
                    match rng.random_range(0..3) {
                        0 => bytes[at] = alphabet[rng.random_range(0..alphabet.len())],
                        1 => {
                            bytes.remove(at);
                        }
                        _ => bytes.insert(at, alphabet[rng.random_range(0..alphabet.len())]),
                    }
                    if bytes.is_empty() {
                        bytes.push(b'{');
                    }
                }
                let Ok(text) = String::from_utf8(bytes) else { continue };
                match target {
                    "parse_sequences" => {
                        if let Ok(seqs) = parse_sequences(&text, &skeleton) {
                            let written = write_sequences(&seqs, &skeleton).unwrap();
                            assert_eq!(parse_sequences(&written, &skeleton).unwrap(), seqs);
                        }
                    }
                    "camera_json" => {
                        let _ = Camera::from_json_str(&text);
                    }
                    "study_config" => {
                        let _ = LiftingStudyConfig::from_json_str(&text);
                    }
                    _ => {
                        let _ = SynthConfig::from_json_str(&text);
                    }
                }
            }
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use canonpose::dataset::{parse_sequences, Skeleton};
use canonpose::synth::default_intrinsics;
use canonpose::Camera;
use tempfile::TempDir;

fn canonpose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canonpose"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Fixture {
    dir: TempDir,
    poses: PathBuf,
    camera: PathBuf,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let poses = dir.path().join("poses.ndjson");
        let camera = dir.path().join("camera.json");
        let cam = Camera {
            intrinsics: default_intrinsics(),
            extrinsics: None,
        };
        std::fs::write(&camera, cam.to_json_string()).unwrap();
        let n = n.to_string();
        stdout(&canonpose(&["synth", "--n-poses", &n, "--seed", "3", "--output", s(&poses)]));
        Self { dir, poses, camera }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_documents_every_flag() {
    let cases: [(&str, &[&str]); 6] = [
        ("canonicalize", &["--input", "--output", "--camera", "--mode", "--skeleton", "--threads"]),
        ("stats", &["--input", "--output", "--camera", "--skeleton", "--samples-csv"]),
        ("eval", &["--pred", "--gt", "--metric", "--output", "--skeleton"]),
        ("synth", &["--config", "--seed", "--n-poses", "--output", "--report", "--skeleton"]),
        ("study", &["--config", "--seed", "--output", "--skeleton"]),
        ("window", &["--input", "--output", "--window-length", "--window-stride", "--pad"]),
    ];
    for (cmd, flags) in cases {
        let out = canonpose(&[cmd, "--help"]);
        let text = stdout(&out);
        for flag in flags {
            assert!(text.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
    assert!(stdout(&canonpose(&["--help"])).contains("millimeters"));
    assert_eq!(canonpose(&["--version"]).status.code(), Some(0));
}

#[test]
fn canonicalize_2d_pins_roots_to_image_center() {
    let f = Fixture::new(40);
    let out = stdout(&canonpose(&[
        "canonicalize", "--input", s(&f.poses), "--camera", s(&f.camera), "--mode", "2d",
    ]));
    let k = default_intrinsics();
    let seqs = parse_sequences(&out, &Skeleton::h36m17()).unwrap();
    let frames: Vec<_> = seqs.iter().flat_map(|s| s.frames()).collect();
    assert_eq!(frames.len(), 40);
    for f in frames {
        let root = f.pose_2d.as_ref().unwrap().joint(0);
        assert_eq!((root.x, root.y), (k.width / 2.0, k.height / 2.0));
    }
    assert!(out.lines().nth(1).unwrap().contains("\"rotation\":["));
}

#[test]
fn canonicalize_output_file_matches_stdout() {
    let f = Fixture::new(10);
    let args = ["canonicalize", "--input", s(&f.poses), "--camera", s(&f.camera), "--mode", "3d"];
    let printed = stdout(&canonpose(&args));
    let target = f.path("canon.ndjson");
    let mut with_output = args.to_vec();
    with_output.extend(["--output", s(&target)]);
    assert!(stdout(&canonpose(&with_output)).is_empty());
    assert_eq!(std::fs::read_to_string(target).unwrap(), printed);
}

#[test]
fn eval_of_identical_files_is_zero() {
    let f = Fixture::new(25);
    for metric in ["mpjpe", "pmpjpe"] {
        let out = stdout(&canonpose(&[
            "eval", "--pred", s(&f.poses), "--gt", s(&f.poses), "--metric", metric,
        ]));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["metric"], metric);
        assert!(v["value_mm"].as_f64().unwrap().abs() < 1e-9);
        assert_eq!(v["frames"], 25);
    }
}

#[test]
fn eval_reports_millimeters() {
    let f = Fixture::new(5);
    let text = std::fs::read_to_string(&f.poses).unwrap();
    let skeleton = Skeleton::h36m17();
    let seqs = parse_sequences(&text, &skeleton).unwrap();
    // Shift every non-root joint 1 cm along x.
    let shifted: Vec<_> = seqs
        .iter()
        .map(|seq| {
            let frames = seq
                .frames()
                .iter()
                .map(|fr| {
                    let mut fr = fr.clone();
                    let p = fr.pose_3d.as_ref().unwrap();
                    let joints: Vec<[f64; 3]> = p
                        .to_arrays()
                        .iter()
                        .enumerate()
                        .map(|(j, a)| if j == 0 { *a } else { [a[0] + 0.01, a[1], a[2]] })
                        .collect();
                    fr.pose_3d = Some(canonpose::Pose3D::from_arrays(&joints, p.frame()).unwrap());
                    fr
                })
                .collect();
            canonpose::dataset::PoseSequence::new(
                seq.subject.clone(),
                seq.action.clone(),
                seq.camera_id.clone(),
                seq.fps,
                frames,
            )
            .unwrap()
        })
        .collect();
    let pred = f.path("pred.ndjson");
    canonpose::dataset::save_sequences(&shifted, &skeleton, &pred).unwrap();
    let out = stdout(&canonpose(&["eval", "--pred", s(&pred), "--gt", s(&f.poses)]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let expected = 10.0 * 16.0 / 17.0;
    assert!((v["value_mm"].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn window_emits_padded_tail() {
    let f = Fixture::new(100);
    let out = stdout(&canonpose(&[
        "window", "--input", s(&f.poses), "--window-length", "243", "--window-stride", "81",
        "--pad", "repeat-last",
    ]));
    let records: Vec<serde_json::Value> =
        out.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 243);
    assert_eq!(records.iter().filter(|r| r["padded"] == true).count(), 143);
    assert!(records[100..].iter().all(|r| r["frame"] == 99));

    let dropped = stdout(&canonpose(&[
        "window", "--input", s(&f.poses), "--window-length", "243", "--window-stride", "81",
    ]));
    assert_eq!(dropped.lines().count(), 1);
}

#[test]
fn stats_reports_all_distributions() {
    let f = Fixture::new(60);
    let csv = f.path("pelvis.csv");
    let out = stdout(&canonpose(&[
        "stats", "--input", s(&f.poses), "--camera", s(&f.camera), "--samples-csv", s(&csv),
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["pelvis_xy_m", "pelvis_image_px", "orientation", "joints_2d_px", "joints_3d_root_relative_m"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["frames"], 60);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 61);
}

#[test]
fn synth_report_passes_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    stdout(&canonpose(&["synth", "--n-poses", "50", "--report", s(&report)]));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v[0]["count"], 50);
    assert_eq!(v[0]["flagged"], 0);
}

#[test]
fn study_accepts_partial_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.json");
    std::fs::write(&cfg, r#"{"n_train": 400, "n_test": 100, "seed": 9}"#).unwrap();
    let out = stdout(&canonpose(&["study", "--config", s(&cfg)]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["seed"], 9);
    assert!(v["shift"]["ratio"].as_f64().unwrap() > 0.0);
    let seeded = stdout(&canonpose(&["study", "--config", s(&cfg), "--seed", "10"]));
    assert_ne!(seeded, out);
}

#[test]
fn validation_errors_exit_1() {
    let f = Fixture::new(3);
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["bogus"],
        vec!["canonicalize", "--input", s(&f.poses), "--camera", s(&f.camera), "--mode", "4d"],
        vec!["canonicalize", "--input", s(&f.poses), "--camera", s(&f.camera)],
        vec!["--threads", "0", "study", "--config", "default"],
        vec!["window", "--input", s(&f.poses), "--window-length", "0", "--window-stride", "1"],
        vec!["canonicalize", "--input", s(&f.poses), "--camera", s(&f.camera), "--mode", "2d", "--skeleton", "coco"],
        vec!["eval", "--pred", s(&f.poses), "--gt", s(&f.poses), "--metric", "pck"],
    ];
    for args in cases {
        let out = canonpose(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let bad_cfg = f.path("bad.json");
    std::fs::write(&bad_cfg, r#"{"n_train": 0}"#).unwrap();
    assert_eq!(canonpose(&["study", "--config", s(&bad_cfg)]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let f = Fixture::new(3);
    let garbage = f.path("garbage.ndjson");
    std::fs::write(&garbage, "{\"subject\": \"S1\"\nnot json\n").unwrap();
    let missing = f.path("missing.ndjson");
    let behind = f.path("behind.ndjson");
    let joints: Vec<[f64; 3]> = (0..17).map(|j| [0.1 * j as f64, 0.0, -1.0]).collect();
    std::fs::write(
        &behind,
        format!(
            "{{\"subject\":\"S\",\"action\":\"a\",\"camera\":\"c\",\"frame\":0,\"joints_3d\":{}}}\n",
            serde_json::to_string(&joints).unwrap()
        ),
    )
    .unwrap();
    let bad_camera = f.path("camera_bad.json");
    std::fs::write(&bad_camera, r#"{"fx": -1, "fy": 1, "cx": 0, "cy": 0, "width": 10, "height": 10}"#).unwrap();

    let cases: Vec<Vec<&str>> = vec![
        vec!["canonicalize", "--input", s(&garbage), "--camera", s(&f.camera), "--mode", "3d"],
        vec!["canonicalize", "--input", s(&missing), "--camera", s(&f.camera), "--mode", "3d"],
        vec!["canonicalize", "--input", s(&behind), "--camera", s(&f.camera), "--mode", "3d"],
        vec!["canonicalize", "--input", s(&f.poses), "--camera", s(&bad_camera), "--mode", "3d"],
        vec!["eval", "--pred", s(&behind), "--gt", s(&f.poses)],
    ];
    for args in cases {
        let out = canonpose(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let err = String::from_utf8(canonpose(&[
        "canonicalize", "--input", s(&garbage), "--camera", s(&f.camera), "--mode", "3d",
    ]).stderr)
    .unwrap();
    assert!(err.contains("line 1"), "{err}");
}

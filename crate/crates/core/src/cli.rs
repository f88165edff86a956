//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid flags or configuration, 2 when
//! input data cannot be read or processed. Diagnostics go to stderr; data
//! goes to `--output` or stdout.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::camera::{project, Camera};
use crate::canonical::root_relative;
use crate::dataset::{
    canonicalize_dataset, load_sequences, window, write_canonical, write_sequences, write_windows,
    CanonicalMode, PadPolicy, PoseSequence, SequenceFrame, Skeleton, WindowSpec,
};
use crate::error::Error;
use crate::lift::{run_study, LiftingStudyConfig};
use crate::metrics::{mpjpe, p_mpjpe};
use crate::stats::{
    body_orientation_distribution, joint_scatter_extent, pelvis_position_distribution,
    DistributionSummary, OrientationSummary, ScatterMode,
};
use crate::synth::{consistency_oracle, generate_poses, ConsistencyReport, SynthConfig};

#[derive(Parser, Debug)]
#[command(
    name = "canonpose",
    version,
    about = "Camera-canonical pose preprocessing, evaluation and lifting study",
    long_about = "Camera-canonical pose preprocessing, evaluation and lifting study.\n\n\
        Lengths are meters inside pose files (scaled by the file header's unit_scale) \
        and millimeters in reported errors."
)]
struct Cli {
    /// Worker threads [default: number of logical cores]
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rotate every frame so the root joint lies on the principal axis
    Canonicalize(CanonicalizeArgs),
    /// Root-position, body-orientation and joint-scatter distributions
    Stats(StatsArgs),
    /// Score predicted 3D poses against ground truth (millimeters)
    Eval(EvalArgs),
    /// Generate synthetic camera-frame poses
    Synth(SynthArgs),
    /// Run the conventional vs canonical linear lifting study
    Study(StudyArgs),
    /// Cut sequences into fixed-length temporal windows
    Window(WindowArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    /// Canonicalize image-space 2D poses directly (test-time path)
    #[value(name = "2d")]
    TwoD,
    /// Rotate 3D poses and project them (training path)
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PadArg {
    /// Discard frames after the last full window
    Drop,
    /// Emit a final window padded with copies of the last frame
    RepeatLast,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    /// Mean per-joint position error after root alignment
    Mpjpe,
    /// MPJPE after similarity (Procrustes) alignment
    Pmpjpe,
}

#[derive(clap::Args, Debug)]
struct CanonicalizeArgs {
    /// Input NDJSON pose file
    #[arg(long)]
    input: PathBuf,
    /// Output NDJSON file [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
    /// Camera JSON (fx, fy, cx, cy, width, height, optional R and t). With
    /// extrinsics, 3D poses are read as world-frame and moved to the camera frame
    #[arg(long)]
    camera: PathBuf,
    /// Which pose to canonicalize from
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Skeleton name
    #[arg(long, default_value = "h36m17")]
    skeleton: String,
}

#[derive(clap::Args, Debug)]
struct StatsArgs {
    /// Input NDJSON pose file
    #[arg(long)]
    input: PathBuf,
    /// Output JSON file [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
    /// Camera JSON, used to project 3D roots for frames without a 2D pose
    #[arg(long)]
    camera: PathBuf,
    /// Skeleton name
    #[arg(long, default_value = "h36m17")]
    skeleton: String,
    /// Also write the raw root x-y samples (meters) as CSV to this path
    #[arg(long)]
    samples_csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    /// Predicted poses (NDJSON); sequences and frames are matched to the
    /// ground truth by subject/action/camera and frame index
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth poses (NDJSON)
    #[arg(long)]
    gt: PathBuf,
    /// Error measure
    #[arg(long, value_enum, default_value = "mpjpe")]
    metric: MetricArg,
    /// Output JSON file [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
    /// Skeleton name; its root joint is used for root alignment
    #[arg(long, default_value = "h36m17")]
    skeleton: String,
}

#[derive(clap::Args, Debug)]
struct SynthArgs {
    /// Generator config JSON (seed, n_poses, limb_scale, root_region,
    /// intrinsics_pool) [default: built-in defaults]
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config pose count
    #[arg(long)]
    n_poses: Option<usize>,
    /// Output NDJSON file [default: stdout]. 2D poses are projected with the
    /// first camera of the intrinsics pool
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write a 2D/3D canonicalization consistency report (JSON, one entry
    /// per pool camera) to this path
    #[arg(long)]
    report: Option<PathBuf>,
    /// Skeleton name
    #[arg(long, default_value = "h36m17")]
    skeleton: String,
}

#[derive(clap::Args, Debug)]
struct StudyArgs {
    /// Study config JSON; missing keys take built-in defaults. The literal
    /// value "default" uses the defaults as is [default: default]
    #[arg(long)]
    config: Option<String>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON report [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
    /// Skeleton name
    #[arg(long, default_value = "h36m17")]
    skeleton: String,
}

#[derive(clap::Args, Debug)]
struct WindowArgs {
    /// Input NDJSON pose file
    #[arg(long)]
    input: PathBuf,
    /// Output NDJSON file [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
    /// Frames per window
    #[arg(long)]
    window_length: usize,
    /// Frames between consecutive window starts
    #[arg(long)]
    window_stride: usize,
    /// Handling of frames after the last full window
    #[arg(long, value_enum, default_value = "drop")]
    pad: PadArg,
    /// Skeleton name
    #[arg(long, default_value = "h36m17")]
    skeleton: String,
}

enum Failure {
    Validation(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidSkeleton(_) => Failure::Validation(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::Validation("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Failure::Validation(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            2
        }
    }
}

fn execute(command: Command) -> CliResult {
    match command {
        Command::Canonicalize(a) => canonicalize(a),
        Command::Stats(a) => stats(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Study(a) => study(a),
        Command::Window(a) => windows(a),
    }
}

fn skeleton(name: &str) -> CliResult<Skeleton> {
    Skeleton::by_name(name).map_err(|e| Failure::Validation(e.to_string()))
}

fn emit(output: Option<&Path>, text: &str) -> CliResult {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Data(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn read_config(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Loads sequences and, when the camera has extrinsics, moves 3D poses into
/// the camera frame.
fn load_camera_frame(input: &Path, camera: &Camera, skeleton: &Skeleton) -> CliResult<Vec<PoseSequence>> {
    let seqs = load_sequences(input, skeleton)?;
    match &camera.extrinsics {
        Some(ext) => Ok(seqs
            .iter()
            .map(|s| s.to_camera_frame(ext))
            .collect::<Result<_, _>>()?),
        None => Ok(seqs),
    }
}

fn canonicalize(a: CanonicalizeArgs) -> CliResult {
    let skeleton = skeleton(&a.skeleton)?;
    let camera = Camera::load(&a.camera)?;
    let seqs = load_camera_frame(&a.input, &camera, &skeleton)?;
    let mode = match a.mode {
        ModeArg::TwoD => CanonicalMode::TwoD,
        ModeArg::ThreeD => CanonicalMode::ThreeD,
    };
    let results = canonicalize_dataset(&seqs, &camera.intrinsics, mode, &skeleton);
    let mut done = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(s) => done.push(s),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        return Err(Failure::Data(errors.join("\n")));
    }
    emit(a.output.as_deref(), &write_canonical(&done, &skeleton)?)
}

#[derive(Serialize)]
struct StatsReport {
    sequences: usize,
    frames: usize,
    pelvis_xy_m: DistributionSummary,
    pelvis_image_px: DistributionSummary,
    orientation: OrientationSummary,
    joints_2d_px: DistributionSummary,
    joints_3d_root_relative_m: DistributionSummary,
}

fn stats(a: StatsArgs) -> CliResult {
    let skeleton = skeleton(&a.skeleton)?;
    let camera = Camera::load(&a.camera)?;
    let seqs = load_camera_frame(&a.input, &camera, &skeleton)?;
    let (xy, image) = pelvis_position_distribution(&seqs, &camera.intrinsics, &skeleton)?;
    if let Some(path) = &a.samples_csv {
        std::fs::write(path, xy.to_csv())
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    }
    let report = StatsReport {
        sequences: seqs.len(),
        frames: seqs.iter().map(PoseSequence::len).sum(),
        pelvis_xy_m: xy,
        pelvis_image_px: image,
        orientation: body_orientation_distribution(&seqs, &skeleton)?,
        joints_2d_px: joint_scatter_extent(&seqs, ScatterMode::TwoD, &skeleton)?,
        joints_3d_root_relative_m: joint_scatter_extent(
            &seqs,
            ScatterMode::ThreeDRootRelative,
            &skeleton,
        )?,
    };
    emit(a.output.as_deref(), &to_json(&report))
}

#[derive(Serialize)]
struct EvalReport {
    metric: &'static str,
    value_mm: f64,
    sequences: usize,
    frames: usize,
}

fn eval(a: EvalArgs) -> CliResult {
    let skeleton = skeleton(&a.skeleton)?;
    let root = skeleton.root_index();
    let pred = load_sequences(&a.pred, &skeleton)?;
    let gt = load_sequences(&a.gt, &skeleton)?;
    let by_key: HashMap<_, _> = pred.iter().map(|s| (s.key(), s)).collect();
    let (mut p_all, mut g_all) = (Vec::new(), Vec::new());
    for g in &gt {
        let p = by_key.get(&g.key()).ok_or_else(|| {
            let (s, act, c) = g.key();
            Failure::Data(format!("no predictions for sequence {s}/{act}/{c}"))
        })?;
        let frames: HashMap<i64, &SequenceFrame> = p.frames().iter().map(|f| (f.index, f)).collect();
        for gf in g.frames() {
            let (s, act, c) = g.key();
            let missing = |what: &str| Failure::Data(format!("{s}/{act}/{c} frame {}: {what}", gf.index));
            let gp = gf.pose_3d.as_ref().ok_or_else(|| missing("ground-truth 3D pose missing"))?;
            let pp = frames
                .get(&gf.index)
                .and_then(|f| f.pose_3d.as_ref())
                .ok_or_else(|| missing("predicted 3D pose missing"))?;
            p_all.push(root_relative(pp, root)?);
            g_all.push(root_relative(gp, root)?);
        }
    }
    let (metric, value) = match a.metric {
        MetricArg::Mpjpe => ("mpjpe", mpjpe(&p_all, &g_all)?),
        MetricArg::Pmpjpe => ("pmpjpe", p_mpjpe(&p_all, &g_all)?),
    };
    let report = EvalReport {
        metric,
        value_mm: value * 1000.0,
        sequences: gt.len(),
        frames: g_all.len(),
    };
    emit(a.output.as_deref(), &to_json(&report))
}

fn synth(a: SynthArgs) -> CliResult {
    let skeleton = skeleton(&a.skeleton)?;
    let mut cfg = match &a.config {
        Some(path) => SynthConfig::from_json_str(&read_config(path)?)?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.n_poses {
        cfg.n_poses = n;
    }
    cfg.validate()?;
    let poses = generate_poses(&cfg, &skeleton)?;
    let frames = poses
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let pose_2d = cfg.intrinsics_pool.first().map(|k| project(p, k)).transpose()?;
            Ok(SequenceFrame {
                index: i as i64,
                pose_2d,
                pose_3d: Some(p.clone()),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let seq = PoseSequence::new("synth", "random", "cam0", crate::dataset::DEFAULT_FPS, frames)?;
    if let Some(path) = &a.report {
        let reports: Vec<ConsistencyReport> = cfg
            .intrinsics_pool
            .iter()
            .map(|k| consistency_oracle(&poses, k, skeleton.root_index()))
            .collect();
        std::fs::write(path, to_json(&reports))
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    }
    emit(a.output.as_deref(), &write_sequences(&[seq], &skeleton)?)
}

fn study(a: StudyArgs) -> CliResult {
    let skeleton = skeleton(&a.skeleton)?;
    let mut cfg = match a.config.as_deref() {
        None | Some("default") => LiftingStudyConfig::default(),
        Some(path) => LiftingStudyConfig::from_json_str(&read_config(Path::new(path))?)?,
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let report = run_study(&cfg, &skeleton)?;
    emit(a.output.as_deref(), &to_json(&report))
}

fn windows(a: WindowArgs) -> CliResult {
    let skeleton = skeleton(&a.skeleton)?;
    let spec = WindowSpec::new(a.window_length, a.window_stride)?;
    let pad = match a.pad {
        PadArg::Drop => PadPolicy::Drop,
        PadArg::RepeatLast => PadPolicy::RepeatLast,
    };
    let seqs = load_sequences(&a.input, &skeleton)?;
    let cut: Vec<_> = seqs.iter().map(|s| (s, window(s, spec, pad))).collect();
    emit(a.output.as_deref(), &write_windows(&cut, &skeleton)?)
}

//! Line-delimited JSON pose files.
//!
//! ```text
//! {"meta": {"skeleton": "h36m17", "unit_scale": 1.0, "fps": 50.0}}      (optional, first line)
//! {"subject": "S1", "action": "walk", "camera": "c0", "frame": 0,
//!  "joints_2d": [[u, v], ...] | null, "joints_3d": [[x, y, z], ...] | null}
//! ```
//!
//! 3D coordinates are multiplied by `unit_scale` on load (use `0.001` for
//! millimeter sources). Output is deterministic: fixed key order and floats
//! written with the shortest digit string that round-trips the `f64`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{CanonicalSequence, PoseSequence, SequenceFrame, Skeleton, Window};
use crate::camera::{Frame, Pose2D, Pose3D, Space};
use crate::error::{Error, Result};

/// Frame rate assumed when a file has no header.
pub const DEFAULT_FPS: f64 = 50.0;

/// File-level header values.
#[derive(Clone, Debug, PartialEq)]
pub struct FileMeta {
    pub skeleton: Option<String>,
    pub unit_scale: f64,
    pub fps: f64,
}

impl Default for FileMeta {
    fn default() -> Self {
        Self {
            skeleton: None,
            unit_scale: 1.0,
            fps: DEFAULT_FPS,
        }
    }
}

#[derive(Deserialize)]
struct Header {
    meta: HeaderMeta,
}

#[derive(Deserialize)]
struct HeaderMeta {
    skeleton: Option<String>,
    unit_scale: Option<f64>,
    fps: Option<f64>,
}

#[derive(Deserialize)]
struct Record {
    subject: String,
    action: String,
    camera: String,
    frame: i64,
    #[serde(default)]
    joints_2d: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    joints_3d: Option<Vec<[f64; 3]>>,
}

fn parse_header(line: &str, lineno: usize, skeleton: &Skeleton) -> Result<Option<FileMeta>> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: lineno,
        message: e.to_string(),
    })?;
    if value.get("meta").is_none() {
        return Ok(None);
    }
    let header: Header = serde_json::from_value(value).map_err(|e| Error::Schema {
        line: lineno,
        message: format!("bad header: {e}"),
    })?;
    let schema = |message: String| Error::Schema {
        line: lineno,
        message,
    };
    let meta = FileMeta {
        skeleton: header.meta.skeleton,
        unit_scale: header.meta.unit_scale.unwrap_or(1.0),
        fps: header.meta.fps.unwrap_or(DEFAULT_FPS),
    };
    if !(meta.unit_scale > 0.0 && meta.unit_scale.is_finite()) {
        return Err(schema(format!("unit_scale {} must be positive", meta.unit_scale)));
    }
    if !(meta.fps > 0.0 && meta.fps.is_finite()) {
        return Err(schema(format!("fps {} must be positive", meta.fps)));
    }
    if let Some(name) = &meta.skeleton {
        if Skeleton::by_name(name).map(|s| s.name() != skeleton.name()).unwrap_or(true) {
            return Err(schema(format!(
                "file skeleton '{name}' does not match '{}'",
                skeleton.name()
            )));
        }
    }
    Ok(Some(meta))
}

/// Parses NDJSON text. Records are grouped by `(subject, action, camera)` in
/// order of first appearance; frames keep file order.
pub fn parse_sequences(text: &str, skeleton: &Skeleton) -> Result<Vec<PoseSequence>> {
    let j = skeleton.num_joints();
    let mut meta = FileMeta::default();
    let mut groups: Vec<(String, String, String, Vec<SequenceFrame>)> = Vec::new();
    let mut lookup: HashMap<(String, String, String), usize> = HashMap::new();
    let mut first = true;

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Some(m) = parse_header(line, lineno, skeleton)? {
                meta = m;
                continue;
            }
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let schema = |message: String| Error::Schema {
            line: lineno,
            message,
        };
        if rec.joints_2d.is_none() && rec.joints_3d.is_none() {
            return Err(schema("record has neither joints_2d nor joints_3d".into()));
        }
        let pose_2d = match &rec.joints_2d {
            Some(v) if v.len() != j => {
                return Err(schema(format!("joints_2d has {} joints, expected {j}", v.len())))
            }
            Some(v) => Some(Pose2D::from_arrays(v, Space::Image).map_err(|e| schema(e.to_string()))?),
            None => None,
        };
        let pose_3d = match &rec.joints_3d {
            Some(v) if v.len() != j => {
                return Err(schema(format!("joints_3d has {} joints, expected {j}", v.len())))
            }
            Some(v) => {
                let scaled: Vec<[f64; 3]> = v
                    .iter()
                    .map(|p| p.map(|c| c * meta.unit_scale))
                    .collect();
                Some(Pose3D::from_arrays(&scaled, Frame::Camera).map_err(|e| schema(e.to_string()))?)
            }
            None => None,
        };
        let key = (rec.subject, rec.action, rec.camera);
        let slot = *lookup.entry(key.clone()).or_insert_with(|| {
            groups.push((key.0, key.1, key.2, Vec::new()));
            groups.len() - 1
        });
        groups[slot].3.push(SequenceFrame {
            index: rec.frame,
            pose_2d,
            pose_3d,
        });
    }

    groups
        .into_iter()
        .map(|(subject, action, camera, frames)| {
            PoseSequence::new(subject, action, camera, meta.fps, frames)
        })
        .collect()
}

pub fn load_sequences(path: impl AsRef<Path>, skeleton: &Skeleton) -> Result<Vec<PoseSequence>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequences(&text, skeleton)
}

/// Formats a finite float with the fewest significant digits that parse
/// back to the same value (at most 17), in positional notation for moderate
/// exponents.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.to_string();
    }
    let sci = format!("{:e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if x < 0.0 { "-" } else { "" };

    if (0..17).contains(&exp) {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{sign}{digits:0<int_len$}.0")
        } else {
            let (int, frac) = digits.split_at(int_len);
            format!("{sign}{int}.{frac}")
        }
    } else if (-5..0).contains(&exp) {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{digits}")
    } else {
        let (lead, rest) = digits.split_at(1);
        let rest = if rest.is_empty() { "0" } else { rest };
        format!("{sign}{lead}.{rest}e{exp}")
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn write_points<const N: usize>(out: &mut String, points: Option<Vec<[f64; N]>>) {
    let Some(points) = points else {
        out.push_str("null");
        return;
    };
    out.push('[');
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (c, v) in p.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(*v));
        }
        out.push(']');
    }
    out.push(']');
}

#[allow(clippy::too_many_arguments)]
fn write_record(
    out: &mut String,
    subject: &str,
    action: &str,
    camera: &str,
    frame: i64,
    joints_2d: Option<Vec<[f64; 2]>>,
    joints_3d: Option<Vec<[f64; 3]>>,
    extra: &[(&str, String)],
) {
    let _ = write!(
        out,
        "{{\"subject\":{},\"action\":{},\"camera\":{},\"frame\":{frame},\"joints_2d\":",
        json_str(subject),
        json_str(action),
        json_str(camera)
    );
    write_points(out, joints_2d);
    out.push_str(",\"joints_3d\":");
    write_points(out, joints_3d);
    for (key, raw) in extra {
        let _ = write!(out, ",{}:{raw}", json_str(key));
    }
    out.push_str("}\n");
}

fn write_header(out: &mut String, skeleton: &Skeleton, fps: f64) {
    let _ = writeln!(
        out,
        "{{\"meta\":{{\"skeleton\":{},\"unit_scale\":1.0,\"fps\":{}}}}}",
        json_str(skeleton.name()),
        format_f64(fps)
    );
}

fn common_fps(fps: impl Iterator<Item = f64>) -> Result<Option<f64>> {
    let mut common = None;
    for f in fps {
        match common {
            None => common = Some(f),
            Some(c) if c != f => {
                return Err(Error::InvalidConfig(format!(
                    "sequences in one file must share a frame rate ({c} vs {f})"
                )))
            }
            _ => {}
        }
    }
    Ok(common)
}

/// Serializes sequences, one record per frame, preceded by a header.
pub fn write_sequences(sequences: &[PoseSequence], skeleton: &Skeleton) -> Result<String> {
    let mut out = String::new();
    let Some(fps) = common_fps(sequences.iter().map(|s| s.fps))? else {
        return Ok(out);
    };
    write_header(&mut out, skeleton, fps);
    for s in sequences {
        for f in s.frames() {
            write_record(
                &mut out,
                &s.subject,
                &s.action,
                &s.camera_id,
                f.index,
                f.pose_2d.as_ref().map(Pose2D::to_arrays),
                f.pose_3d.as_ref().map(Pose3D::to_arrays),
                &[],
            );
        }
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_sequences(
    sequences: &[PoseSequence],
    skeleton: &Skeleton,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path.as_ref(), &write_sequences(sequences, skeleton)?)
}

/// Serializes canonical sequences. Records follow the pose schema
/// (`joints_2d` canonical image-space pose, `joints_3d` canonical-frame pose)
/// plus `rotation` (9 numbers, row-major) and `root_depth` (meters or null).
pub fn write_canonical(sequences: &[CanonicalSequence], skeleton: &Skeleton) -> Result<String> {
    let mut out = String::new();
    let Some(fps) = common_fps(sequences.iter().map(|s| s.fps))? else {
        return Ok(out);
    };
    write_header(&mut out, skeleton, fps);
    for s in sequences {
        for f in &s.frames {
            let r = &f.record;
            let rotation = format!(
                "[{}]",
                r.rotation
                    .to_row_major()
                    .iter()
                    .map(|v| format_f64(*v))
                    .collect::<Vec<_>>()
                    .join(",")
            );
            let depth = r.root_depth.map(format_f64).unwrap_or_else(|| "null".into());
            write_record(
                &mut out,
                &s.subject,
                &s.action,
                &s.camera_id,
                f.index,
                Some(r.canonical_2d.to_arrays()),
                r.canonical_3d.as_ref().map(Pose3D::to_arrays),
                &[("rotation", rotation), ("root_depth", depth)],
            );
        }
    }
    Ok(out)
}

pub fn save_canonical(
    sequences: &[CanonicalSequence],
    skeleton: &Skeleton,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path.as_ref(), &write_canonical(sequences, skeleton)?)
}

/// Serializes windows as pose records, one per window frame, with extra keys
/// `window` (running index within its sequence), `offset` (first frame of
/// the window) and `padded` (true for repeated tail frames).
pub fn write_windows(windows: &[(&PoseSequence, Vec<Window>)], skeleton: &Skeleton) -> Result<String> {
    let mut out = String::new();
    let Some(fps) = common_fps(windows.iter().map(|(s, _)| s.fps))? else {
        return Ok(out);
    };
    write_header(&mut out, skeleton, fps);
    for (s, ws) in windows {
        for (n, w) in ws.iter().enumerate() {
            let first_pad = w.frames.len() - w.padded;
            for (i, f) in w.frames.iter().enumerate() {
                write_record(
                    &mut out,
                    &s.subject,
                    &s.action,
                    &s.camera_id,
                    f.index,
                    f.pose_2d.as_ref().map(Pose2D::to_arrays),
                    f.pose_3d.as_ref().map(Pose3D::to_arrays),
                    &[
                        ("window", n.to_string()),
                        ("offset", w.offset.to_string()),
                        ("padded", (i >= first_pad).to_string()),
                    ],
                );
            }
        }
    }
    Ok(out)
}

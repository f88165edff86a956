use std::path::PathBuf;

use crate::camera::{Frame, Space};

/// Errors produced by the geometry, dataset and lifting layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("pose is in the {found:?} frame, expected {expected:?}")]
    InvalidFrame { expected: Frame, found: Frame },

    #[error("2D pose is in {found:?} space, expected {expected:?}")]
    InvalidSpace { expected: Space, found: Space },

    #[error("joint {joint} has depth {depth} at or behind the camera")]
    BehindCamera { joint: usize, depth: f64 },

    #[error("vector norm {norm} is too small to define a direction")]
    DegenerateVector { norm: f64 },

    #[error("vectors are antiparallel (cos = {cos}); alignment rotation is undefined")]
    Antiparallel { cos: f64 },

    #[error("joint {joint} dehomogenizes with w = {w}")]
    DegenerateHomogeneous { joint: usize, w: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate joint configuration: {0}")]
    DegenerateShape(String),

    #[error("normal matrix is singular")]
    Singular,

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("sequence {sequence}: canonicalization failed on {} frame(s): {}", frames.len(), summarize(frames))]
    Canonicalization {
        sequence: String,
        frames: Vec<(usize, String)>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn summarize(frames: &[(usize, String)]) -> String {
    frames
        .iter()
        .map(|(i, m)| format!("[{i}] {m}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Dataset distribution diagnostics: root positions, body orientation, and
//! pooled joint scatter.

use rayon::prelude::*;
use serde::Serialize;

use crate::camera::{project, CameraIntrinsics, Frame, Pose3D};
use crate::canonical::root_relative;
use crate::dataset::{PoseSequence, Skeleton};
use crate::error::Result;
use crate::metrics::pairwise_sum;

/// Histogram bins per axis.
pub const HISTOGRAM_BINS: usize = 64;

/// Cross products shorter than this count as degenerate orientations.
const DEGENERATE_NORM: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `HISTOGRAM_BINS + 1` edges spanning the observed bounds.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(values: impl Iterator<Item = f64> + Clone, min: f64, max: f64) -> Self {
        let width = (max - min) / HISTOGRAM_BINS as f64;
        let edges = (0..=HISTOGRAM_BINS)
            .map(|i| if i == HISTOGRAM_BINS { max } else { min + width * i as f64 })
            .collect();
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        for v in values {
            counts[bin_index(v, min, max)] += 1;
        }
        Self { edges, counts }
    }
}

/// Bin of `v` among [`HISTOGRAM_BINS`] uniform bins over `[min, max]`; the
/// upper bound falls in the last bin, and a zero-width range uses bin 0.
pub fn bin_index(v: f64, min: f64, max: f64) -> usize {
    if max <= min {
        return 0;
    }
    let b = ((v - min) / (max - min) * HISTOGRAM_BINS as f64).floor();
    (b.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// Bounds, mean and per-axis histograms of a set of 2- or 3-vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub dim: usize,
    pub count: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mean: Vec<f64>,
    pub histograms: Vec<Histogram>,
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl DistributionSummary {
    pub fn from_samples(dim: usize, samples: Vec<Vec<f64>>) -> Self {
        debug_assert!(samples.iter().all(|s| s.len() == dim));
        if samples.is_empty() {
            return Self {
                dim,
                count: 0,
                min: vec![],
                max: vec![],
                mean: vec![],
                histograms: vec![],
                samples,
            };
        }
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        let mut mean = vec![0.0; dim];
        let mut histograms = Vec::with_capacity(dim);
        for axis in 0..dim {
            let column: Vec<f64> = samples.iter().map(|s| s[axis]).collect();
            for &v in &column {
                min[axis] = min[axis].min(v);
                max[axis] = max[axis].max(v);
            }
            mean[axis] = pairwise_sum(&column) / column.len() as f64;
            histograms.push(Histogram::build(column.iter().copied(), min[axis], max[axis]));
        }
        Self {
            dim,
            count: samples.len(),
            min,
            max,
            mean,
            histograms,
            samples,
        }
    }

    /// `max - min` per axis; empty for an empty summary.
    pub fn extent(&self) -> Vec<f64> {
        self.min.iter().zip(&self.max).map(|(a, b)| b - a).collect()
    }

    /// Samples as CSV with an `x,y[,z]` header.
    pub fn to_csv(&self) -> String {
        let header = ["x", "y", "z"][..self.dim].join(",");
        let mut out = header + "\n";
        for s in &self.samples {
            let row: Vec<String> = s.iter().map(|v| crate::dataset::format_f64(*v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn collect<T: Send>(
    sequences: &[PoseSequence],
    per_seq: impl Fn(&PoseSequence) -> Result<Vec<T>> + Sync + Send,
) -> Result<Vec<T>> {
    let parts: Vec<Result<Vec<T>>> = sequences.par_iter().map(per_seq).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Root positions: camera x-y plane (from 3D poses) and image plane (from
/// 2D poses, or from projecting the 3D root with `k` when no 2D pose is
/// stored).
pub fn pelvis_position_distribution(
    sequences: &[PoseSequence],
    k: &CameraIntrinsics,
    skeleton: &Skeleton,
) -> Result<(DistributionSummary, DistributionSummary)> {
    let root = skeleton.root_index();
    let xy = collect(sequences, |s| {
        Ok(s.frames()
            .iter()
            .filter_map(|f| f.pose_3d.as_ref())
            .map(|p| vec![p.joint(root).x, p.joint(root).y])
            .collect())
    })?;
    let image = collect(sequences, |s| {
        let mut v = Vec::new();
        for f in s.frames() {
            if let Some(p) = &f.pose_2d {
                v.push(vec![p.joint(root).x, p.joint(root).y]);
            } else if let Some(p) = &f.pose_3d {
                let r = Pose3D::new(vec![p.joint(root)], Frame::Camera)?;
                let q = project(&r, k)?.joint(0);
                v.push(vec![q.x, q.y]);
            }
        }
        Ok(v)
    })?;
    Ok((
        DistributionSummary::from_samples(2, xy),
        DistributionSummary::from_samples(2, image),
    ))
}

/// Unit body-facing directions plus the number of frames whose hip and
/// spine vectors were (near) parallel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationSummary {
    pub summary: DistributionSummary,
    pub degenerate: usize,
}

/// Direction of `(left_hip - right_hip) × (torso - pelvis)`, normalized.
/// `None` when the cross product vanishes.
pub fn body_direction(pose: &Pose3D, skeleton: &Skeleton) -> Option<nalgebra::Vector3<f64>> {
    let across = pose.joint(skeleton.left_hip_index()) - pose.joint(skeleton.right_hip_index());
    let up = pose.joint(skeleton.torso_index()) - pose.joint(skeleton.root_index());
    let c = across.cross(&up);
    let n = c.norm();
    (n > DEGENERATE_NORM).then(|| c / n)
}

pub fn body_orientation_distribution(
    sequences: &[PoseSequence],
    skeleton: &Skeleton,
) -> Result<OrientationSummary> {
    let dirs = collect(sequences, |s| {
        Ok(s.frames()
            .iter()
            .filter_map(|f| f.pose_3d.as_ref())
            .map(|p| body_direction(p, skeleton))
            .collect())
    })?;
    let degenerate = dirs.iter().filter(|d| d.is_none()).count();
    let samples = dirs.into_iter().flatten().map(|d| vec![d.x, d.y, d.z]).collect();
    Ok(OrientationSummary {
        summary: DistributionSummary::from_samples(3, samples),
        degenerate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScatterMode {
    /// Image-space 2D joints.
    TwoD,
    /// Root-relative 3D joints.
    ThreeDRootRelative,
}

/// Every joint of every frame pooled into one distribution.
pub fn joint_scatter_extent(
    sequences: &[PoseSequence],
    mode: ScatterMode,
    skeleton: &Skeleton,
) -> Result<DistributionSummary> {
    let root = skeleton.root_index();
    match mode {
        ScatterMode::TwoD => {
            let v = collect(sequences, |s| {
                Ok(s.frames()
                    .iter()
                    .filter_map(|f| f.pose_2d.as_ref())
                    .flat_map(|p| p.joints().iter().map(|j| vec![j.x, j.y]))
                    .collect())
            })?;
            Ok(DistributionSummary::from_samples(2, v))
        }
        ScatterMode::ThreeDRootRelative => {
            let v = collect(sequences, |s| {
                let mut v = Vec::new();
                for p in s.frames().iter().filter_map(|f| f.pose_3d.as_ref()) {
                    let rel = root_relative(p, root)?;
                    v.extend(rel.joints().iter().map(|j| vec![j.x, j.y, j.z]));
                }
                Ok(v)
            })?;
            Ok(DistributionSummary::from_samples(3, v))
        }
    }
}

//! MPJPE and Procrustes-aligned MPJPE.
//!
//! Inputs are meters; the CLI converts to millimeters on output.

use nalgebra::{Matrix3, Vector3};

use crate::camera::Pose3D;
use crate::error::{Error, Result};

/// Ratio of the second to the first singular value below which a joint set
/// counts as collinear.
const RANK_TOL: f64 = 1e-10;

/// Best similarity `x ↦ s·R·x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }
}

/// Sum with pairwise (cascade) reduction, so the result does not depend on
/// how a caller chunks work and rounding grows as `O(log n)`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn check_pair(pred: &Pose3D, gt: &Pose3D) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::Dimension(format!(
            "prediction has {} joints, ground truth has {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.frame() != gt.frame() {
        return Err(Error::InvalidFrame {
            expected: gt.frame(),
            found: pred.frame(),
        });
    }
    Ok(())
}

fn joint_errors(pred: &Pose3D, gt: &Pose3D) -> Vec<f64> {
    pred.joints()
        .iter()
        .zip(gt.joints())
        .map(|(a, b)| (a - b).norm())
        .collect()
}

/// Mean per-joint Euclidean error of one frame.
pub fn frame_error(pred: &Pose3D, gt: &Pose3D) -> Result<f64> {
    check_pair(pred, gt)?;
    Ok(pairwise_sum(&joint_errors(pred, gt)) / pred.len() as f64)
}

fn check_sequences(pred: &[Pose3D], gt: &[Pose3D]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::Dimension(format!(
            "{} predicted frames, {} ground-truth frames",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Dimension("no frames to evaluate".into()));
    }
    Ok(())
}

/// Mean over frames and joints of the joint distance. Both sequences are
/// expected to be root-relative already.
pub fn mpjpe(pred: &[Pose3D], gt: &[Pose3D]) -> Result<f64> {
    check_sequences(pred, gt)?;
    let mut all = Vec::with_capacity(pred.len() * pred[0].len());
    for (p, g) in pred.iter().zip(gt) {
        check_pair(p, g)?;
        all.extend(joint_errors(p, g));
    }
    Ok(pairwise_sum(&all) / all.len() as f64)
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

fn check_rank(points: &[Vector3<f64>], which: &str) -> Result<()> {
    let c = centroid(points);
    let scatter: Matrix3<f64> = points.iter().map(|p| (p - c) * (p - c).transpose()).sum();
    let mut sv = scatter.symmetric_eigenvalues();
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    // Eigenvalues of the scatter matrix are squared singular values.
    if !(sv[0] > 0.0) || sv[1].max(0.0).sqrt() <= RANK_TOL * sv[0].sqrt() {
        return Err(Error::DegenerateShape(format!(
            "{which} joints are collinear or coincident"
        )));
    }
    Ok(())
}

/// Least-squares similarity alignment of `pred` onto `gt` (rotation from
/// the SVD of the cross-covariance with reflections excluded, optimal
/// uniform scale, centroid translation).
pub fn procrustes_align(pred: &Pose3D, gt: &Pose3D) -> Result<(Pose3D, SimilarityTransform)> {
    check_pair(pred, gt)?;
    if pred.len() < 3 {
        return Err(Error::DegenerateShape(format!(
            "alignment needs at least 3 joints, found {}",
            pred.len()
        )));
    }
    check_rank(pred.joints(), "predicted")?;
    check_rank(gt.joints(), "ground-truth")?;

    let n = pred.len() as f64;
    let (mu_p, mu_g) = (centroid(pred.joints()), centroid(gt.joints()));
    let mut cov = Matrix3::zeros();
    let mut var_p = 0.0;
    for (p, g) in pred.joints().iter().zip(gt.joints()) {
        let (pc, gc) = (p - mu_p, g - mu_g);
        cov += gc * pc.transpose();
        var_p += pc.norm_squared();
    }
    cov /= n;
    var_p /= n;

    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let rotation = u * d * v_t;
    let trace: f64 = (0..3).map(|i| svd.singular_values[i] * d[(i, i)]).sum();
    let scale = trace / var_p;
    if !(scale > 0.0) {
        return Err(Error::DegenerateShape(format!(
            "optimal scale {scale} is not positive"
        )));
    }
    let transform = SimilarityTransform {
        scale,
        rotation,
        translation: mu_g - scale * rotation * mu_p,
    };
    let aligned = Pose3D::new(
        pred.joints().iter().map(|p| transform.apply(p)).collect(),
        pred.frame(),
    )?;
    Ok((aligned, transform))
}

/// MPJPE after per-frame Procrustes alignment.
pub fn p_mpjpe(pred: &[Pose3D], gt: &[Pose3D]) -> Result<f64> {
    check_sequences(pred, gt)?;
    let mut all = Vec::with_capacity(pred.len() * pred[0].len());
    for (p, g) in pred.iter().zip(gt) {
        let (aligned, _) = procrustes_align(p, g)?;
        all.extend(joint_errors(&aligned, g));
    }
    Ok(pairwise_sum(&all) / all.len() as f64)
}

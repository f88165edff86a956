//! Canonicalization: rotating a pose about the camera center so that its
//! root joint sits on the principal axis, and the matching transform for
//! 2D poses when no 3D pose is available.
//!
//! Two routes produce the same canonical 2D pose:
//!
//! * from 3D: rotate the camera-frame pose with [`canonicalize_3d`] and
//!   project it with the principal point moved to the image center
//!   ([`project_canonical_centered`]);
//! * from 2D: lift the pixels onto the normalized image plane, rotate the
//!   homogeneous rays with the rotation computed from the root ray, and
//!   re-project ([`canonicalize_2d`]).
//!
//! Because a rotation about the camera center maps rays to rays, both routes
//! agree up to floating-point rounding. Depth is never canonicalized; the
//! root keeps its distance from the camera.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::camera::{
    check_rotation, project_with_center, to_normalized_plane, CameraIntrinsics, Frame, Pose2D,
    Pose3D, Space, EPS_DEPTH,
};
use crate::error::{Error, Result};

/// Vectors shorter than this (meters, or normalized-plane units) have no
/// usable direction.
pub const EPS_VEC: f64 = 1e-9;

/// Alignment fails when `cos θ < -1 + EPS_ANTI`.
pub const EPS_ANTI: f64 = 1e-8;

/// Tolerance used when validating produced rotations.
pub const ALIGN_TOL: f64 = 1e-9;

pub fn principal_axis() -> Vector3<f64> {
    Vector3::z()
}

/// A proper rotation taking the direction of `source_vector` onto the
/// principal axis (or, for [`rodrigues_align`], onto a chosen target).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalRotation {
    matrix: Matrix3<f64>,
    source_vector: Vector3<f64>,
}

impl CanonicalRotation {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
            source_vector: principal_axis(),
        }
    }

    /// Rebuilds a rotation from stored parts, checking that it is proper.
    pub fn from_parts(matrix: Matrix3<f64>, source_vector: Vector3<f64>) -> Result<Self> {
        check_rotation(&matrix).map_err(Error::InvalidPose)?;
        Ok(Self {
            matrix,
            source_vector,
        })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn source_vector(&self) -> &Vector3<f64> {
        &self.source_vector
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        self.matrix.transpose()
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.matrix;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues rotation taking the direction of `a` onto the direction of `b`.
///
/// With `â`, `b̂` the unit inputs, `k` the unit axis of `â × b̂`, `sin θ = |â × b̂|`
/// and `cos θ = â·b̂`, the result is `I + sin θ [k]ₓ + (1 - cos θ) [k]ₓ²`. It is
/// evaluated as `I + [v]ₓ + [v]ₓ² / (1 + cos θ)` with `v = â × b̂`, which is the
/// same matrix and stays well conditioned as `θ → 0`.
pub fn rodrigues_align(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<CanonicalRotation> {
    let (na, nb) = (a.norm(), b.norm());
    for norm in [na, nb] {
        if !(norm > EPS_VEC) {
            return Err(Error::DegenerateVector { norm });
        }
    }
    let (a_hat, b_hat) = (a / na, b / nb);
    let cos = a_hat.dot(&b_hat).clamp(-1.0, 1.0);
    if cos < -1.0 + EPS_ANTI {
        return Err(Error::Antiparallel { cos });
    }
    let s = skew(&a_hat.cross(&b_hat));
    let matrix = Matrix3::identity() + s + s * s / (1.0 + cos);
    Ok(CanonicalRotation {
        matrix,
        source_vector: *a,
    })
}

fn root_of(pose_len: usize, root: usize) -> Result<()> {
    if root >= pose_len {
        return Err(Error::Dimension(format!(
            "root index {root} out of range for {pose_len} joints"
        )));
    }
    Ok(())
}

/// Rotates a camera-frame pose so its root lies on the principal axis at
/// `(0, 0, |root|)`.
pub fn canonicalize_3d(pose: &Pose3D, root: usize) -> Result<(Pose3D, CanonicalRotation)> {
    pose.require_frame(Frame::Camera)?;
    root_of(pose.len(), root)?;
    let pelvis = pose.joint(root);
    if pelvis.z <= EPS_DEPTH {
        return Err(Error::BehindCamera {
            joint: root,
            depth: pelvis.z,
        });
    }
    let rotation = rodrigues_align(&pelvis, &principal_axis())?;
    let depth = pelvis.norm();
    let mut out = pose.map(Frame::CanonicalCamera, |p| rotation.matrix * p);
    // The rotated root differs from the axis point by rounding only; pin it so
    // downstream centering is exact.
    out = snap_joint(out, root, Vector3::new(0.0, 0.0, depth));
    Ok((out, rotation))
}

fn snap_joint(pose: Pose3D, index: usize, value: Vector3<f64>) -> Pose3D {
    let frame = pose.frame();
    let mut joints = pose.joints().to_vec();
    joints[index] = value;
    Pose3D::new(joints, frame).expect("finite joints stay finite")
}

/// Projects a canonical-frame pose with the principal point replaced by the
/// image center, so the root lands on `(W/2, H/2)`.
pub fn project_canonical_centered(pose: &Pose3D, k: &CameraIntrinsics) -> Result<Pose2D> {
    pose.require_frame(Frame::CanonicalCamera)?;
    project_with_center(pose, k, k.image_center())
}

/// Subtracts the root joint from every joint. Frame is unchanged.
pub fn root_relative(pose: &Pose3D, root: usize) -> Result<Pose3D> {
    root_of(pose.len(), root)?;
    let r = pose.joint(root);
    Ok(pose.map(pose.frame(), |p| p - r))
}

/// Test-time canonicalization of an image-space 2D pose.
///
/// Joints are lifted to rays `K⁻¹ [u, v, 1]ᵀ`, rotated by the rotation that
/// aligns the root ray with the principal axis, dehomogenized, re-projected
/// with `K`, and finally shifted so the root sits on the image center rather
/// than the principal point. The last step makes the output match
/// [`project_canonical_centered`] of the corresponding 3D pose.
pub fn canonicalize_2d(
    pose: &Pose2D,
    k: &CameraIntrinsics,
    root: usize,
) -> Result<(Pose2D, CanonicalRotation)> {
    pose.require_space(Space::Image)?;
    root_of(pose.len(), root)?;
    let normalized = to_normalized_plane(pose, k)?;
    let r = normalized.joint(root);
    let rotation = rodrigues_align(&Vector3::new(r.x, r.y, 1.0), &principal_axis())?;
    let center = k.image_center();
    let mut joints = Vec::with_capacity(pose.len());
    for (joint, n) in normalized.joints().iter().enumerate() {
        let q = rotation.matrix * Vector3::new(n.x, n.y, 1.0);
        if q.z.abs() <= EPS_DEPTH {
            return Err(Error::DegenerateHomogeneous { joint, w: q.z });
        }
        joints.push(Vector2::new(
            k.fx * q.x / q.z + center.x,
            k.fy * q.y / q.z + center.y,
        ));
    }
    joints[root] = center;
    Ok((Pose2D::new(joints, Space::Image)?, rotation))
}

/// Maps a root-relative canonical-frame prediction back into the camera
/// frame: `root_relative(Rᵀ (pred + (0, 0, d)))`.
///
/// For a root-relative `pred` the result does not depend on `root_depth`.
pub fn back_transform(
    pred: &Pose3D,
    rotation: &CanonicalRotation,
    root_depth: f64,
    root: usize,
) -> Result<Pose3D> {
    pred.require_frame(Frame::CanonicalCamera)?;
    let inv = rotation.inverse_matrix();
    let shift = Vector3::new(0.0, 0.0, root_depth);
    let restored = pred.map(Frame::Camera, |p| inv * (p + shift));
    root_relative(&restored, root)
}

/// Image-plane offset between a pose rooted at `(X, Y, Z)` and the same pose
/// rooted on the principal axis at `(0, 0, Z)`: `(fx X / Z, fy Y / Z)`.
pub fn residual_offset(root: &Vector3<f64>, k: &CameraIntrinsics) -> Result<Vector2<f64>> {
    if root.z <= EPS_DEPTH {
        return Err(Error::BehindCamera {
            joint: 0,
            depth: root.z,
        });
    }
    Ok(Vector2::new(k.fx * root.x / root.z, k.fy * root.y / root.z))
}

/// A canonicalized 2D-3D pair with everything needed to undo the transform.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalRecord {
    /// Canonical-frame pose with the root at `(0, 0, root_depth)`. Absent when
    /// only a 2D pose was available.
    pub canonical_3d: Option<Pose3D>,
    /// Image-space pose with the root at `(W/2, H/2)`.
    pub canonical_2d: Pose2D,
    pub rotation: CanonicalRotation,
    /// `|P_C^r|` in meters, when a 3D pose was available.
    pub root_depth: Option<f64>,
    pub skeleton: String,
}

impl CanonicalRecord {
    /// Canonicalizes from a camera-frame 3D pose.
    pub fn from_3d(
        pose: &Pose3D,
        k: &CameraIntrinsics,
        root: usize,
        skeleton: &str,
    ) -> Result<Self> {
        let (canonical_3d, rotation) = canonicalize_3d(pose, root)?;
        let canonical_2d = project_canonical_centered(&canonical_3d, k)?;
        Ok(Self {
            root_depth: Some(canonical_3d.joint(root).z),
            canonical_3d: Some(canonical_3d),
            canonical_2d,
            rotation,
            skeleton: skeleton.to_string(),
        })
    }

    /// Canonicalizes from an image-space 2D pose. A camera-frame 3D pose, if
    /// given, is rotated with the rotation recovered from the 2D pose.
    pub fn from_2d(
        pose: &Pose2D,
        pose_3d: Option<&Pose3D>,
        k: &CameraIntrinsics,
        root: usize,
        skeleton: &str,
    ) -> Result<Self> {
        let (canonical_2d, rotation) = canonicalize_2d(pose, k, root)?;
        let canonical_3d = match pose_3d {
            Some(p) => {
                p.require_frame(Frame::Camera)?;
                if p.len() != pose.len() {
                    return Err(Error::Dimension(format!(
                        "2D pose has {} joints, 3D pose has {}",
                        pose.len(),
                        p.len()
                    )));
                }
                Some(p.map(Frame::CanonicalCamera, |q| rotation.matrix * q))
            }
            None => None,
        };
        Ok(Self {
            root_depth: pose_3d.map(|p| p.joint(root).norm()),
            canonical_3d,
            canonical_2d,
            rotation,
            skeleton: skeleton.to_string(),
        })
    }
}

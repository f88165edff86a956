//! Pinhole camera parameters and the transforms between the global frame,
//! the camera frame, the image plane, and the normalized image plane.
//!
//! Every pose value carries a tag naming the frame (3D) or space (2D) its
//! coordinates live in. Operations check the tag on entry and stamp the tag
//! of their result, so mixing up image pixels with normalized-plane
//! coordinates is an error instead of a silently wrong number.

use std::path::Path;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joints with depth at or below this value (meters) are rejected by every
/// projective operation.
pub const EPS_DEPTH: f64 = 1e-6;

/// Tolerance for orthogonality and determinant checks on rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Coordinate frame of a [`Pose3D`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Global,
    Camera,
    CanonicalCamera,
}

/// Coordinate space of a [`Pose2D`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    /// Pixels.
    Image,
    /// Depth-1 plane, `(X/Z, Y/Z)`.
    NormalizedPlane,
    /// `((2u - W) / W, (2v - H) / W)`.
    ScreenNormalized,
}

/// A J-joint 3D pose in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose3D {
    joints: Vec<Vector3<f64>>,
    frame: Frame,
}

impl Pose3D {
    pub fn new(joints: Vec<Vector3<f64>>, frame: Frame) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidPose("a pose needs at least one joint".into()));
        }
        if let Some(j) = joints.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidPose(format!("joint {j} is not finite")));
        }
        Ok(Self { joints, frame })
    }

    pub fn from_arrays(joints: &[[f64; 3]], frame: Frame) -> Result<Self> {
        Self::new(joints.iter().map(|&p| Vector3::from(p)).collect(), frame)
    }

    pub fn joints(&self) -> &[Vector3<f64>] {
        &self.joints
    }

    pub fn joint(&self, index: usize) -> Vector3<f64> {
        self.joints[index]
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn to_arrays(&self) -> Vec<[f64; 3]> {
        self.joints.iter().map(|p| [p.x, p.y, p.z]).collect()
    }

    /// Re-tags the pose without touching coordinates.
    ///
    /// Only for callers that know the coordinates already satisfy the new
    /// frame's meaning (for example, file data whose frame is declared out of
    /// band by the presence of extrinsics).
    pub fn reinterpret(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub(crate) fn map(&self, frame: Frame, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        Self {
            joints: self.joints.iter().map(f).collect(),
            frame,
        }
    }

    fn expect_frame(&self, expected: Frame) -> Result<()> {
        if self.frame != expected {
            return Err(Error::InvalidFrame {
                expected,
                found: self.frame,
            });
        }
        Ok(())
    }

    pub(crate) fn require_frame(&self, expected: Frame) -> Result<()> {
        self.expect_frame(expected)
    }

    pub(crate) fn check_depths(&self) -> Result<()> {
        for (joint, p) in self.joints.iter().enumerate() {
            if p.z <= EPS_DEPTH {
                return Err(Error::BehindCamera { joint, depth: p.z });
            }
        }
        Ok(())
    }
}

/// A J-joint 2D pose.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose2D {
    joints: Vec<Vector2<f64>>,
    space: Space,
}

impl Pose2D {
    pub fn new(joints: Vec<Vector2<f64>>, space: Space) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidPose("a pose needs at least one joint".into()));
        }
        if let Some(j) = joints.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidPose(format!("joint {j} is not finite")));
        }
        Ok(Self { joints, space })
    }

    pub fn from_arrays(joints: &[[f64; 2]], space: Space) -> Result<Self> {
        Self::new(joints.iter().map(|&p| Vector2::from(p)).collect(), space)
    }

    pub fn joints(&self) -> &[Vector2<f64>] {
        &self.joints
    }

    pub fn joint(&self, index: usize) -> Vector2<f64> {
        self.joints[index]
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn to_arrays(&self) -> Vec<[f64; 2]> {
        self.joints.iter().map(|p| [p.x, p.y]).collect()
    }

    pub(crate) fn from_parts(joints: Vec<Vector2<f64>>, space: Space) -> Self {
        Self { joints, space }
    }

    /// Adds `offset` to every joint, keeping the space tag.
    pub fn translate(&self, offset: Vector2<f64>) -> Self {
        Self {
            joints: self.joints.iter().map(|p| p + offset).collect(),
            space: self.space,
        }
    }

    pub(crate) fn require_space(&self, expected: Space) -> Result<()> {
        if self.space != expected {
            return Err(Error::InvalidSpace {
                expected,
                found: self.space,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: f64, height: f64) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.fx, self.fy, self.cx, self.cy, self.width, self.height];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera("intrinsics must be finite".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive (fx = {}, fy = {})",
                self.fx, self.fy
            )));
        }
        if !(self.cx > 0.0 && self.cx < self.width) || !(self.cy > 0.0 && self.cy < self.height) {
            return Err(Error::InvalidCamera(format!(
                "principal point ({}, {}) outside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn image_center(&self) -> Vector2<f64> {
        Vector2::new(self.width / 2.0, self.height / 2.0)
    }

    /// The same camera with its principal point moved to the image center.
    pub fn centered(&self) -> Self {
        Self {
            cx: self.width / 2.0,
            cy: self.height / 2.0,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraExtrinsics {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraExtrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation).map_err(Error::InvalidCamera)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera("translation must be finite".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }
}

/// Checks `RᵀR = I` and `det R = +1` to [`ROTATION_TOL`].
pub fn check_rotation(r: &Matrix3<f64>) -> std::result::Result<(), String> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err("rotation must be finite".into());
    }
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    if ortho > ROTATION_TOL {
        return Err(format!("rotation is not orthogonal (|RᵀR - I| = {ortho:e})"));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ROTATION_TOL {
        return Err(format!("rotation determinant is {det}, expected +1"));
    }
    Ok(())
}

/// Intrinsics plus optional extrinsics, as read from a camera JSON file.
///
/// Missing extrinsics mean poses are already expressed in the camera frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: Option<CameraExtrinsics>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: f64,
    height: f64,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    rotation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<Vec<f64>>,
}

impl Camera {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: CameraFile =
            serde_json::from_str(s).map_err(|e| Error::InvalidCamera(e.to_string()))?;
        let intrinsics = CameraIntrinsics::new(
            file.fx,
            file.fy,
            file.cx,
            file.cy,
            file.width,
            file.height,
        )?;
        let extrinsics = match (file.rotation, file.t) {
            (None, None) => None,
            (r, t) => {
                let rotation = match r {
                    Some(r) if r.len() == 9 => Matrix3::from_row_slice(&r),
                    Some(r) => {
                        return Err(Error::InvalidCamera(format!(
                            "R must have 9 entries, found {}",
                            r.len()
                        )))
                    }
                    None => Matrix3::identity(),
                };
                let translation = match t {
                    Some(t) if t.len() == 3 => Vector3::new(t[0], t[1], t[2]),
                    Some(t) => {
                        return Err(Error::InvalidCamera(format!(
                            "t must have 3 entries, found {}",
                            t.len()
                        )))
                    }
                    None => Vector3::zeros(),
                };
                Some(CameraExtrinsics::new(rotation, translation)?)
            }
        };
        Ok(Self {
            intrinsics,
            extrinsics,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let k = &self.intrinsics;
        let file = CameraFile {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
            rotation: self
                .extrinsics
                .map(|e| e.rotation.transpose().iter().copied().collect()),
            t: self.extrinsics.map(|e| e.translation.iter().copied().collect()),
        };
        serde_json::to_string(&file).expect("camera serializes")
    }
}

/// `P_C = R·P_G + t`, applied per joint.
pub fn world_to_camera(pose: &Pose3D, ext: &CameraExtrinsics) -> Result<Pose3D> {
    pose.expect_frame(Frame::Global)?;
    Ok(pose.map(Frame::Camera, |p| ext.rotation * p + ext.translation))
}

fn project_joints(pose: &Pose3D, fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Pose2D> {
    pose.check_depths()?;
    let joints = pose
        .joints
        .iter()
        .map(|p| Vector2::new(fx * p.x / p.z + cx, fy * p.y / p.z + cy))
        .collect();
    Ok(Pose2D::from_parts(joints, Space::Image))
}

/// Pinhole projection of a camera-frame pose into pixels.
pub fn project(pose: &Pose3D, k: &CameraIntrinsics) -> Result<Pose2D> {
    pose.expect_frame(Frame::Camera)?;
    project_joints(pose, k.fx, k.fy, k.cx, k.cy)
}

/// Projection with an arbitrary principal point, frame-agnostic. Used where a
/// rotated pose is projected (canonical frame).
pub(crate) fn project_with_center(
    pose: &Pose3D,
    k: &CameraIntrinsics,
    center: Vector2<f64>,
) -> Result<Pose2D> {
    project_joints(pose, k.fx, k.fy, center.x, center.y)
}

/// Applies `K⁻¹`: pixels to the depth-1 plane.
pub fn to_normalized_plane(pose: &Pose2D, k: &CameraIntrinsics) -> Result<Pose2D> {
    pose.require_space(Space::Image)?;
    let joints = pose
        .joints
        .iter()
        .map(|p| Vector2::new((p.x - k.cx) / k.fx, (p.y - k.cy) / k.fy))
        .collect();
    Ok(Pose2D::from_parts(joints, Space::NormalizedPlane))
}

/// Applies `K`: depth-1 plane back to pixels.
pub fn from_normalized_plane(pose: &Pose2D, k: &CameraIntrinsics) -> Result<Pose2D> {
    pose.require_space(Space::NormalizedPlane)?;
    let joints = pose
        .joints
        .iter()
        .map(|p| Vector2::new(k.fx * p.x + k.cx, k.fy * p.y + k.cy))
        .collect();
    Ok(Pose2D::from_parts(joints, Space::Image))
}

/// Maps the image onto `x ∈ [-1, 1]`; both axes are divided by the width so
/// the aspect ratio survives.
pub fn screen_normalize(pose: &Pose2D, k: &CameraIntrinsics) -> Result<Pose2D> {
    pose.require_space(Space::Image)?;
    let (w, h) = (k.width, k.height);
    let joints = pose
        .joints
        .iter()
        .map(|p| Vector2::new((2.0 * p.x - w) / w, (2.0 * p.y - h) / w))
        .collect();
    Ok(Pose2D::from_parts(joints, Space::ScreenNormalized))
}

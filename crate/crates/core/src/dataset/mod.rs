//! Pose sequences: skeleton metadata, NDJSON ingestion and serialization,
//! temporal windowing, and batch canonicalization.

mod ndjson;
mod skeleton;
mod window;

pub use ndjson::{
    format_f64, load_sequences, parse_sequences, save_canonical, save_sequences,
    write_canonical, write_sequences, write_windows, FileMeta, DEFAULT_FPS,
};
pub use skeleton::Skeleton;
pub use window::{window, PadPolicy, Window, WindowSpec};

use rayon::prelude::*;

use crate::camera::{world_to_camera, CameraExtrinsics, CameraIntrinsics, Frame, Pose2D, Pose3D};
use crate::canonical::CanonicalRecord;
use crate::error::{Error, Result};

/// One time step of a sequence. At least one of the two poses is present.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceFrame {
    pub index: i64,
    pub pose_2d: Option<Pose2D>,
    pub pose_3d: Option<Pose3D>,
}

/// Consecutive frames of one subject performing one action, seen from one
/// camera.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence {
    pub subject: String,
    pub action: String,
    pub camera_id: String,
    pub fps: f64,
    frames: Vec<SequenceFrame>,
}

impl PoseSequence {
    pub fn new(
        subject: impl Into<String>,
        action: impl Into<String>,
        camera_id: impl Into<String>,
        fps: f64,
        frames: Vec<SequenceFrame>,
    ) -> Result<Self> {
        let seq = Self {
            subject: subject.into(),
            action: action.into(),
            camera_id: camera_id.into(),
            fps,
            frames,
        };
        seq.validate()?;
        Ok(seq)
    }

    fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::InvalidPose(format!("{}: no frames", self.key_string())));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::InvalidPose(format!("fps {} is not positive", self.fps)));
        }
        let j = self.num_joints();
        for f in &self.frames {
            if f.pose_2d.is_none() && f.pose_3d.is_none() {
                return Err(Error::InvalidPose(format!(
                    "{}: frame {} has neither a 2D nor a 3D pose",
                    self.key_string(),
                    f.index
                )));
            }
            let lens = [f.pose_2d.as_ref().map(Pose2D::len), f.pose_3d.as_ref().map(Pose3D::len)];
            if lens.iter().flatten().any(|&n| n != j) {
                return Err(Error::Dimension(format!(
                    "{}: frame {} does not have {j} joints",
                    self.key_string(),
                    f.index
                )));
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> &[SequenceFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn num_joints(&self) -> usize {
        let f = &self.frames[0];
        f.pose_3d
            .as_ref()
            .map(Pose3D::len)
            .or(f.pose_2d.as_ref().map(Pose2D::len))
            .unwrap_or(0)
    }

    pub fn key(&self) -> (&str, &str, &str) {
        (&self.subject, &self.action, &self.camera_id)
    }

    fn key_string(&self) -> String {
        format!("{}/{}/{}", self.subject, self.action, self.camera_id)
    }

    /// Treats the stored 3D poses as global-frame and moves them into the
    /// camera frame.
    pub fn to_camera_frame(&self, ext: &CameraExtrinsics) -> Result<Self> {
        let mut out = self.clone();
        for f in &mut out.frames {
            if let Some(p) = f.pose_3d.take() {
                f.pose_3d = Some(world_to_camera(&p.reinterpret(Frame::Global), ext)?);
            }
        }
        Ok(out)
    }
}

/// Which pose a dataset is canonicalized from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalMode {
    /// Rotate the camera-frame 3D pose and project it (training data).
    ThreeD,
    /// Canonicalize the image-space 2D pose directly (test time).
    TwoD,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalFrame {
    pub index: i64,
    pub record: CanonicalRecord,
}

/// A sequence whose frames were canonicalized one by one.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalSequence {
    pub subject: String,
    pub action: String,
    pub camera_id: String,
    pub fps: f64,
    pub frames: Vec<CanonicalFrame>,
}

impl CanonicalSequence {
    /// Canonical 2D (image space) and canonical 3D (canonical-camera frame)
    /// poses as an ordinary sequence.
    pub fn to_pose_sequence(&self) -> PoseSequence {
        PoseSequence {
            subject: self.subject.clone(),
            action: self.action.clone(),
            camera_id: self.camera_id.clone(),
            fps: self.fps,
            frames: self
                .frames
                .iter()
                .map(|f| SequenceFrame {
                    index: f.index,
                    pose_2d: Some(f.record.canonical_2d.clone()),
                    pose_3d: f.record.canonical_3d.clone(),
                })
                .collect(),
        }
    }
}

/// Canonicalizes every frame of one sequence. Any failing frame fails the
/// whole sequence; the error lists every offending frame.
pub fn canonicalize_sequence(
    seq: &PoseSequence,
    k: &CameraIntrinsics,
    mode: CanonicalMode,
    skeleton: &Skeleton,
) -> Result<CanonicalSequence> {
    let root = skeleton.root_index();
    let mut frames = Vec::with_capacity(seq.len());
    let mut failures = Vec::new();
    for (i, f) in seq.frames.iter().enumerate() {
        let record = match mode {
            CanonicalMode::ThreeD => match &f.pose_3d {
                Some(p) => CanonicalRecord::from_3d(p, k, root, skeleton.name()),
                None => Err(Error::InvalidPose("3D pose missing".into())),
            },
            CanonicalMode::TwoD => match &f.pose_2d {
                Some(p) => {
                    CanonicalRecord::from_2d(p, f.pose_3d.as_ref(), k, root, skeleton.name())
                }
                None => Err(Error::InvalidPose("2D pose missing".into())),
            },
        };
        match record {
            Ok(record) => frames.push(CanonicalFrame {
                index: f.index,
                record,
            }),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Canonicalization {
            sequence: seq.key_string(),
            frames: failures,
        });
    }
    Ok(CanonicalSequence {
        subject: seq.subject.clone(),
        action: seq.action.clone(),
        camera_id: seq.camera_id.clone(),
        fps: seq.fps,
        frames,
    })
}

/// Canonicalizes sequences in parallel. Results are in input order, one per
/// input sequence.
pub fn canonicalize_dataset(
    sequences: &[PoseSequence],
    k: &CameraIntrinsics,
    mode: CanonicalMode,
    skeleton: &Skeleton,
) -> Vec<Result<CanonicalSequence>> {
    sequences
        .par_iter()
        .map(|s| canonicalize_sequence(s, k, mode, skeleton))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{project, Space};
    use nalgebra::{Matrix3, Vector3};

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(1100.0, 1050.0, 512.0, 490.0, 1000.0, 1000.0).unwrap()
    }

    fn seq_from(poses: Vec<Pose3D>, with_2d: bool) -> PoseSequence {
        let frames = poses
            .into_iter()
            .enumerate()
            .map(|(i, p)| SequenceFrame {
                index: i as i64,
                pose_2d: with_2d.then(|| project(&p, &k()).unwrap()),
                pose_3d: Some(p),
            })
            .collect();
        PoseSequence::new("S1", "walk", "c0", 50.0, frames).unwrap()
    }

    fn offset_pose(root: [f64; 3]) -> Pose3D {
        let s = Skeleton::h36m17();
        let mut joints = vec![Vector3::from(root)];
        for j in 1..17 {
            let p = joints[s.parent(j).unwrap()];
            joints.push(p + s.rest_offsets()[j]);
        }
        Pose3D::new(joints, Frame::Camera).unwrap()
    }

    #[test]
    fn on_axis_sequence_has_identity_rotations() {
        let seq = seq_from(vec![offset_pose([0.0, 0.0, 4.0]); 5], false);
        let out = canonicalize_sequence(&seq, &k(), CanonicalMode::ThreeD, &Skeleton::h36m17())
            .unwrap();
        for f in &out.frames {
            assert_eq!(*f.record.rotation.matrix(), Matrix3::identity());
        }
    }

    #[test]
    fn both_modes_agree_on_projected_data() {
        let poses = (0..20)
            .map(|i| offset_pose([0.1 * i as f64 - 1.0, 0.05 * i as f64 - 0.5, 3.0 + 0.1 * i as f64]))
            .collect();
        let seqs = vec![seq_from(poses, true)];
        let s = Skeleton::h36m17();
        let a = canonicalize_dataset(&seqs, &k(), CanonicalMode::ThreeD, &s);
        let b = canonicalize_dataset(&seqs, &k(), CanonicalMode::TwoD, &s);
        assert_eq!(a.len(), 1);
        let (a, b) = (a[0].as_ref().unwrap(), b[0].as_ref().unwrap());
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (p, q) in fa.record.canonical_2d.joints().iter().zip(fb.record.canonical_2d.joints()) {
                assert!((p - q).abs().max() < 1e-9);
            }
        }
    }

    #[test]
    fn failures_are_collected_per_frame() {
        let mut poses = vec![offset_pose([0.0, 0.0, 4.0]); 4];
        poses[1] = offset_pose([0.0, 0.0, -4.0]);
        poses[3] = offset_pose([0.0, 0.0, -3.0]);
        let seq = seq_from(poses, false);
        match canonicalize_sequence(&seq, &k(), CanonicalMode::ThreeD, &Skeleton::h36m17()) {
            Err(Error::Canonicalization { frames, .. }) => {
                assert_eq!(frames.iter().map(|f| f.0).collect::<Vec<_>>(), vec![1, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
        // 2D mode needs 2D poses.
        let seq = seq_from(vec![offset_pose([0.0, 0.0, 4.0])], false);
        assert!(canonicalize_sequence(&seq, &k(), CanonicalMode::TwoD, &Skeleton::h36m17()).is_err());
    }

    #[test]
    fn sequence_validation() {
        assert!(PoseSequence::new("a", "b", "c", 50.0, vec![]).is_err());
        let empty = SequenceFrame {
            index: 0,
            pose_2d: None,
            pose_3d: None,
        };
        assert!(PoseSequence::new("a", "b", "c", 50.0, vec![empty]).is_err());
        let mixed = vec![
            SequenceFrame {
                index: 0,
                pose_2d: None,
                pose_3d: Some(offset_pose([0.0, 0.0, 3.0])),
            },
            SequenceFrame {
                index: 1,
                pose_2d: Some(Pose2D::from_arrays(&[[1.0, 1.0]], Space::Image).unwrap()),
                pose_3d: None,
            },
        ];
        assert!(matches!(
            PoseSequence::new("a", "b", "c", 50.0, mixed),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn extrinsics_move_poses_into_camera_frame() {
        let seq = seq_from(vec![offset_pose([0.0, 0.0, 0.0])], false);
        let ext = CameraExtrinsics::new(Matrix3::identity(), Vector3::new(0.0, 0.0, 4.0)).unwrap();
        let cam = seq.to_camera_frame(&ext).unwrap();
        let p = cam.frames()[0].pose_3d.as_ref().unwrap();
        assert_eq!(p.frame(), Frame::Camera);
        assert_eq!(p.joint(0), Vector3::new(0.0, 0.0, 4.0));
    }
}

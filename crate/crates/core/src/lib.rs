//! Camera-canonical 2D-to-3D human pose lifting utilities.
//!
//! Poses are rotated so the root joint sits on the camera's principal axis,
//! which removes the image-position dependence of 2D inputs while keeping
//! 2D and 3D poses geometrically consistent. The crate provides the camera
//! model, the canonicalization transforms and their inverse, pose metrics,
//! dataset I/O and windowing, distribution statistics, a synthetic pose
//! generator, a linear lifting baseline, and a command-line front end.

// Negated float comparisons are used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod canonical;
pub mod cli;
pub mod dataset;
mod error;
pub mod lift;
pub mod metrics;
pub mod stats;
pub mod synth;

pub use camera::{Camera, CameraExtrinsics, CameraIntrinsics, Frame, Pose2D, Pose3D, Space};
pub use canonical::{CanonicalRecord, CanonicalRotation};
pub use error::{Error, Result};

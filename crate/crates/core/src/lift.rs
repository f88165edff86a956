//! A linear 2D-to-3D lifter and the position-shift study comparing the
//! conventional and canonical input/output encodings.
//!
//! Conventional pairs are (screen-normalized image pose, root-relative
//! camera-frame pose). Canonical pairs are (screen-normalized canonical 2D
//! pose, root-relative canonical 3D pose). At test time the canonical arm
//! canonicalizes the observed 2D pose, predicts, and rotates the prediction
//! back into the camera frame before scoring.

use nalgebra::{DMatrix, Vector3};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{
    project, screen_normalize, CameraIntrinsics, Frame, Pose2D, Pose3D, Space,
};
use crate::canonical::{
    back_transform, canonicalize_2d, canonicalize_3d, project_canonical_centered, root_relative,
};
use crate::dataset::Skeleton;
use crate::error::{Error, Result};
use crate::metrics::{frame_error, mpjpe, p_mpjpe, pairwise_sum};
use crate::synth::{
    default_intrinsics, domain, generate_in_region, stream_rng, PosePrior, Region, MIN_ROOT_DEPTH,
};

/// A screen-normalized input and its root-relative target.
pub type TrainingPair = (Pose2D, Pose3D);

/// Feature standard deviations below this are treated as constant columns.
const MIN_FEATURE_STD: f64 = 1e-12;

/// Relative pivot size below which the normal matrix counts as singular.
const SINGULAR_PIVOT: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingKind {
    Conventional,
    Canonical,
}

impl MappingKind {
    /// Frame of the lifter's root-relative targets and predictions.
    pub fn target_frame(self) -> Frame {
        match self {
            MappingKind::Conventional => Frame::Camera,
            MappingKind::Canonical => Frame::CanonicalCamera,
        }
    }
}

/// Affine map from a flattened screen-normalized 2D pose to a flattened
/// root-relative 3D pose.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearLifter {
    /// `(2J + 1) × 3J`; the last row is the bias.
    weights: DMatrix<f64>,
    ridge_lambda: f64,
    mapping_kind: MappingKind,
}

fn flatten_2d(p: &Pose2D) -> impl Iterator<Item = f64> + '_ {
    p.joints().iter().flat_map(|j| [j.x, j.y])
}

fn flatten_3d(p: &Pose3D) -> impl Iterator<Item = f64> + '_ {
    p.joints().iter().flat_map(|j| [j.x, j.y, j.z])
}

impl LinearLifter {
    /// Builds a lifter from explicit weights.
    pub fn from_weights(
        weights: DMatrix<f64>,
        ridge_lambda: f64,
        mapping_kind: MappingKind,
    ) -> Result<Self> {
        let (rows, cols) = weights.shape();
        if cols == 0 || cols % 3 != 0 || rows != 2 * (cols / 3) + 1 {
            return Err(Error::Dimension(format!(
                "weights must be (2J+1) x 3J, got {rows} x {cols}"
            )));
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite".into()));
        }
        if !(ridge_lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ridge_lambda {ridge_lambda} must be non-negative"
            )));
        }
        Ok(Self {
            weights,
            ridge_lambda,
            mapping_kind,
        })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda
    }

    pub fn mapping_kind(&self) -> MappingKind {
        self.mapping_kind
    }

    pub fn num_joints(&self) -> usize {
        self.weights.ncols() / 3
    }
}

/// Ridge regression on standardized inputs with an unpenalized intercept.
///
/// Inputs must be screen-normalized; targets must be root-relative poses in
/// the frame that `kind` expects.
pub fn fit(pairs: &[TrainingPair], ridge_lambda: f64, kind: MappingKind) -> Result<LinearLifter> {
    if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "ridge_lambda {ridge_lambda} must be non-negative"
        )));
    }
    let j = pairs.first().map(|(p, _)| p.len()).unwrap_or(0);
    let (d_in, d_out) = (2 * j, 3 * j);
    if j == 0 || pairs.len() < d_in + 1 {
        return Err(Error::Dimension(format!(
            "{} training pairs; need at least 2J + 1 = {}",
            pairs.len(),
            d_in + 1
        )));
    }
    for (x, y) in pairs {
        x.require_space(Space::ScreenNormalized)?;
        y.require_frame(kind.target_frame())?;
        if x.len() != j || y.len() != j {
            return Err(Error::Dimension(format!(
                "pair with {} / {} joints, expected {j}",
                x.len(),
                y.len()
            )));
        }
    }
    let n = pairs.len();
    let x = DMatrix::from_row_iterator(n, d_in, pairs.iter().flat_map(|(p, _)| flatten_2d(p)));
    let y = DMatrix::from_row_iterator(n, d_out, pairs.iter().flat_map(|(_, p)| flatten_3d(p)));

    let column_means = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..m.ncols())
            .map(|c| pairwise_sum(m.column(c).as_slice()) / n as f64)
            .collect()
    };
    let mu = column_means(&x);
    let y_mean = column_means(&y);
    let mut xs = x;
    let mut sigma = vec![1.0; d_in];
    for c in 0..d_in {
        let mut col = xs.column_mut(c);
        col.add_scalar_mut(-mu[c]);
        let var = col.norm_squared() / n as f64;
        if var.sqrt() > MIN_FEATURE_STD {
            sigma[c] = var.sqrt();
            col /= sigma[c];
        }
    }
    let mut yc = y;
    for (mut col, mean) in yc.column_iter_mut().zip(&y_mean) {
        col.add_scalar_mut(-mean);
    }

    let mut normal = xs.tr_mul(&xs);
    for i in 0..d_in {
        normal[(i, i)] += ridge_lambda;
    }
    let rhs = xs.tr_mul(&yc);
    let chol = normal.clone().cholesky().ok_or(Error::Singular)?;
    let pivots = chol.l_dirty().diagonal();
    let (lo, hi) = pivots.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !(lo > SINGULAR_PIVOT * hi) {
        return Err(Error::Singular);
    }
    let slopes_std = chol.solve(&rhs);

    let mut weights = DMatrix::zeros(d_in + 1, d_out);
    for r in 0..d_in {
        for c in 0..d_out {
            weights[(r, c)] = slopes_std[(r, c)] / sigma[r];
        }
    }
    for c in 0..d_out {
        let shift: f64 = (0..d_in).map(|r| mu[r] * weights[(r, c)]).sum();
        weights[(d_in, c)] = y_mean[c] - shift;
    }
    LinearLifter::from_weights(weights, ridge_lambda, kind)
}

/// Root-relative 3D prediction, in the lifter's target frame.
pub fn predict(lifter: &LinearLifter, pose: &Pose2D) -> Result<Pose3D> {
    pose.require_space(Space::ScreenNormalized)?;
    let j = lifter.num_joints();
    if pose.len() != j {
        return Err(Error::Dimension(format!(
            "lifter expects {j} joints, pose has {}",
            pose.len()
        )));
    }
    let w = &lifter.weights;
    let input: Vec<f64> = flatten_2d(pose).collect();
    let joints = (0..j)
        .map(|jj| {
            Vector3::from_fn(|axis, _| {
                let c = 3 * jj + axis;
                let dot: f64 = input.iter().enumerate().map(|(r, x)| x * w[(r, c)]).sum();
                dot + w[(2 * j, c)]
            })
        })
        .collect();
    Pose3D::new(joints, lifter.mapping_kind.target_frame())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiftingStudyConfig {
    pub train_root_region: Region,
    pub test_root_region: Region,
    /// Standard deviation of additive 2D noise, pixels.
    pub noise_sigma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub ridge_lambda: f64,
    pub limb_scale: f64,
    pub pose_prior: PosePrior,
    pub intrinsics: CameraIntrinsics,
}

/// Any heading, moderate tilt, half the default articulation. Tilts of
/// this size keep canonicalized off-axis test poses inside the training
/// orientation range.
fn study_prior() -> PosePrior {
    PosePrior {
        yaw_range: std::f64::consts::PI,
        tilt_range: 0.3,
        swing_scale: 0.5,
    }
}

impl Default for LiftingStudyConfig {
    fn default() -> Self {
        Self {
            train_root_region: Region::new([-0.02, -0.02, 3.0], [0.02, 0.02, 5.0]),
            test_root_region: Region::new([0.75, 0.5, 3.0], [1.25, 1.0, 5.0]),
            noise_sigma: 2.0,
            n_train: 20_000,
            n_test: 5_000,
            seed: 0,
            ridge_lambda: 1e-4,
            limb_scale: 1.0,
            pose_prior: study_prior(),
            intrinsics: default_intrinsics(),
        }
    }
}

impl LiftingStudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.train_root_region.validate(MIN_ROOT_DEPTH)?;
        self.test_root_region.validate(MIN_ROOT_DEPTH)?;
        if !self.train_root_region.xy_disjoint(&self.test_root_region) {
            return Err(Error::InvalidConfig(
                "test_root_region must not overlap train_root_region in x-y".into(),
            ));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("n_train and n_test must be at least 1".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma {} must be non-negative",
                self.noise_sigma
            )));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ridge_lambda {} must be non-negative",
                self.ridge_lambda
            )));
        }
        if !(self.limb_scale > 0.0 && self.limb_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "limb_scale {} must be positive",
                self.limb_scale
            )));
        }
        self.pose_prior.validate()?;
        self.intrinsics.validate()
    }

    /// Parses a JSON config; missing keys take their default values.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Errors of one arm, millimeters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArmReport {
    pub mpjpe_mm: f64,
    pub p_mpjpe_mm: f64,
    /// Mean and standard deviation of per-pose MPJPE on the training set.
    pub train_mpjpe_mm: f64,
    pub train_mpjpe_std_mm: f64,
}

/// Both arms evaluated on one test set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub test_root_region: Region,
    pub n_test: usize,
    pub conventional: ArmReport,
    pub canonical: ArmReport,
    /// `canonical.mpjpe_mm / conventional.mpjpe_mm`.
    pub ratio: f64,
    /// Canonical arm scored without rotating predictions back.
    pub canonical_without_back_transform_mpjpe_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub seed: u64,
    pub config: LiftingStudyConfig,
    /// Test roots drawn from the test region.
    pub shift: EvaluationReport,
    /// Test roots drawn from the training region (fresh poses).
    pub control: EvaluationReport,
}

mod stream {
    pub const TRAIN: u64 = 10;
    pub const SHIFT: u64 = 11;
    pub const CONTROL: u64 = 12;
}

fn noise(seed: u64, set: u64, index: usize, joints: usize, sigma: f64) -> Vec<nalgebra::Vector2<f64>> {
    let mut rng = stream_rng(seed, domain::NOISE * 100 + set, index as u64);
    let normal = Normal::new(0.0, sigma).expect("non-negative sigma");
    (0..joints)
        .map(|_| nalgebra::Vector2::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect()
}

fn add_noise(p: &Pose2D, n: &[nalgebra::Vector2<f64>]) -> Result<Pose2D> {
    Pose2D::new(p.joints().iter().zip(n).map(|(a, b)| a + b).collect(), p.space())
}

struct TrainingSet {
    conventional: Vec<TrainingPair>,
    canonical: Vec<TrainingPair>,
}

fn training_pairs(cfg: &LiftingStudyConfig, poses: &[Pose3D], root: usize) -> Result<TrainingSet> {
    let k = &cfg.intrinsics;
    let pairs: Vec<Result<(TrainingPair, TrainingPair)>> = poses
        .par_iter()
        .enumerate()
        .map(|(i, pose)| {
            let n = noise(cfg.seed, stream::TRAIN, i, pose.len(), cfg.noise_sigma);
            let image = add_noise(&project(pose, k)?, &n)?;
            let conventional = (screen_normalize(&image, k)?, root_relative(pose, root)?);
            let (canon, _) = canonicalize_3d(pose, root)?;
            let canon_image = add_noise(&project_canonical_centered(&canon, k)?, &n)?;
            let canonical = (screen_normalize(&canon_image, k)?, root_relative(&canon, root)?);
            Ok((conventional, canonical))
        })
        .collect();
    let mut set = TrainingSet {
        conventional: Vec::with_capacity(poses.len()),
        canonical: Vec::with_capacity(poses.len()),
    };
    for p in pairs {
        let (a, b) = p?;
        set.conventional.push(a);
        set.canonical.push(b);
    }
    Ok(set)
}

fn mean_std_mm(errors: &[f64]) -> (f64, f64) {
    let n = errors.len() as f64;
    let mean = pairwise_sum(errors) / n;
    let sq: Vec<f64> = errors.iter().map(|e| (e - mean) * (e - mean)).collect();
    (mean * 1000.0, (pairwise_sum(&sq) / n).sqrt() * 1000.0)
}

fn training_residual(lifter: &LinearLifter, pairs: &[TrainingPair]) -> Result<(f64, f64)> {
    let errors: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|(x, y)| frame_error(&predict(lifter, x)?, y))
        .collect();
    let errors = errors.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(mean_std_mm(&errors))
}

struct Predictions {
    truth: Vec<Pose3D>,
    conventional: Vec<Pose3D>,
    canonical: Vec<Pose3D>,
    canonical_raw: Vec<Pose3D>,
}

fn evaluate(
    cfg: &LiftingStudyConfig,
    set: u64,
    region: &Region,
    lifters: (&LinearLifter, &LinearLifter),
    trained: ((f64, f64), (f64, f64)),
    skeleton: &Skeleton,
) -> Result<EvaluationReport> {
    let k = &cfg.intrinsics;
    let root = skeleton.root_index();
    let poses = generate_in_region(
        cfg.seed,
        set,
        cfg.n_test,
        region,
        cfg.limb_scale,
        &cfg.pose_prior,
        skeleton,
    );
    let rows: Vec<Result<[Pose3D; 4]>> = poses
        .par_iter()
        .enumerate()
        .map(|(i, pose)| {
            let n = noise(cfg.seed, set, i, pose.len(), cfg.noise_sigma);
            let observed = add_noise(&project(pose, k)?, &n)?;
            let conventional = predict(lifters.0, &screen_normalize(&observed, k)?)?;
            let (canon_2d, rotation) = canonicalize_2d(&observed, k, root)?;
            let raw = predict(lifters.1, &screen_normalize(&canon_2d, k)?)?;
            // The depth term cancels for root-relative predictions.
            let canonical = back_transform(&raw, &rotation, 0.0, root)?;
            let raw = raw.reinterpret(Frame::Camera);
            Ok([root_relative(pose, root)?, conventional, canonical, raw])
        })
        .collect();
    let mut p = Predictions {
        truth: vec![],
        conventional: vec![],
        canonical: vec![],
        canonical_raw: vec![],
    };
    for row in rows {
        let [t, a, b, c] = row?;
        p.truth.push(t);
        p.conventional.push(a);
        p.canonical.push(b);
        p.canonical_raw.push(c);
    }
    let arm = |pred: &[Pose3D], (train_mean, train_std): (f64, f64)| -> Result<ArmReport> {
        Ok(ArmReport {
            mpjpe_mm: mpjpe(pred, &p.truth)? * 1000.0,
            p_mpjpe_mm: p_mpjpe(pred, &p.truth)? * 1000.0,
            train_mpjpe_mm: train_mean,
            train_mpjpe_std_mm: train_std,
        })
    };
    let conventional = arm(&p.conventional, trained.0)?;
    let canonical = arm(&p.canonical, trained.1)?;
    Ok(EvaluationReport {
        test_root_region: *region,
        n_test: cfg.n_test,
        ratio: canonical.mpjpe_mm / conventional.mpjpe_mm,
        canonical_without_back_transform_mpjpe_mm: mpjpe(&p.canonical_raw, &p.truth)? * 1000.0,
        conventional,
        canonical,
    })
}

/// Trains one lifter per mapping on the same poses and noise, then scores
/// both on a shifted test set and on an in-domain control set.
pub fn run_study(cfg: &LiftingStudyConfig, skeleton: &Skeleton) -> Result<StudyReport> {
    cfg.validate()?;
    let root = skeleton.root_index();
    let train = generate_in_region(
        cfg.seed,
        stream::TRAIN,
        cfg.n_train,
        &cfg.train_root_region,
        cfg.limb_scale,
        &cfg.pose_prior,
        skeleton,
    );
    let pairs = training_pairs(cfg, &train, root)?;
    let conventional = fit(&pairs.conventional, cfg.ridge_lambda, MappingKind::Conventional)?;
    let canonical = fit(&pairs.canonical, cfg.ridge_lambda, MappingKind::Canonical)?;
    let trained = (
        training_residual(&conventional, &pairs.conventional)?,
        training_residual(&canonical, &pairs.canonical)?,
    );
    let lifters = (&conventional, &canonical);
    Ok(StudyReport {
        seed: cfg.seed,
        shift: evaluate(cfg, stream::SHIFT, &cfg.test_root_region, lifters, trained, skeleton)?,
        control: evaluate(cfg, stream::CONTROL, &cfg.train_root_region, lifters, trained, skeleton)?,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sn(v: Vec<[f64; 2]>) -> Pose2D {
        Pose2D::from_arrays(&v, Space::ScreenNormalized).unwrap()
    }

    /// Pairs whose targets are an exact affine function of the inputs.
    fn planted(rng: &mut ChaCha8Rng, n: usize, j: usize) -> (Vec<(Pose2D, Pose3D)>, DMatrix<f64>) {
        let w = DMatrix::from_fn(2 * j + 1, 3 * j, |_, _| rng.random_range(-1.0..1.0));
        let pairs = (0..n)
            .map(|_| {
                let x: Vec<[f64; 2]> = (0..j)
                    .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-0.7..0.7)])
                    .collect();
                let mut row: Vec<f64> = x.iter().flat_map(|p| *p).collect();
                row.push(1.0);
                let out: Vec<f64> = (0..3 * j)
                    .map(|c| (0..row.len()).map(|r| row[r] * w[(r, c)]).sum())
                    .collect();
                let y: Vec<[f64; 3]> = out.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
                (sn(x), Pose3D::from_arrays(&y, Frame::Camera).unwrap())
            })
            .collect();
        (pairs, w)
    }

    #[test]
    fn recovers_planted_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (pairs, w) = planted(&mut rng, 200, 4);
        let lifter = fit(&pairs, 0.0, MappingKind::Conventional).unwrap();
        assert!((lifter.weights() - &w).abs().max() < 1e-6);
        let pred = predict(&lifter, &pairs[7].0).unwrap();
        for (a, b) in pred.joints().iter().zip(pairs[7].1.joints()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn heavy_regularization_shrinks_slopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (pairs, _) = planted(&mut rng, 100, 3);
        let lifter = fit(&pairs, 1e12, MappingKind::Conventional).unwrap();
        let slopes = lifter.weights().rows(0, 6);
        assert!(slopes.abs().max() < 1e-6);
    }

    #[test]
    fn beats_zero_predictor_on_training_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut pairs, _) = planted(&mut rng, 100, 3);
        // Perturb targets so the fit is not exact.
        for (_, y) in &mut pairs {
            let noisy: Vec<[f64; 3]> = y
                .to_arrays()
                .iter()
                .map(|p| p.map(|c| c + rng.random_range(-0.5..0.5)))
                .collect();
            *y = Pose3D::from_arrays(&noisy, Frame::Camera).unwrap();
        }
        for lambda in [0.0, 1e-4, 1.0, 100.0] {
            let lifter = fit(&pairs, lambda, MappingKind::Conventional).unwrap();
            let mut fitted = 0.0;
            let mut zero = 0.0;
            for (x, y) in &pairs {
                let p = predict(&lifter, x).unwrap();
                for (a, b) in p.joints().iter().zip(y.joints()) {
                    fitted += (a - b).norm_squared();
                    zero += b.norm_squared();
                }
            }
            assert!(fitted <= zero, "lambda {lambda}: {fitted} > {zero}");
        }
    }

    #[test]
    fn singular_without_regularization() {
        let pairs: Vec<(Pose2D, Pose3D)> = (0..10)
            .map(|i| {
                (
                    sn(vec![[0.0, i as f64], [0.5, 0.0]]),
                    Pose3D::from_arrays(&[[0.0; 3], [1.0, 0.0, i as f64]], Frame::Camera).unwrap(),
                )
            })
            .collect();
        assert!(matches!(fit(&pairs, 0.0, MappingKind::Conventional), Err(Error::Singular)));
        assert!(fit(&pairs, 1e-4, MappingKind::Conventional).is_ok());
    }

    #[test]
    fn fit_input_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (pairs, _) = planted(&mut rng, 8, 4);
        assert!(matches!(fit(&pairs, 0.0, MappingKind::Conventional), Err(Error::Dimension(_))));
        let (pairs, _) = planted(&mut rng, 20, 2);
        assert!(matches!(fit(&pairs, 0.0, MappingKind::Canonical), Err(Error::InvalidFrame { .. })));
        assert!(fit(&pairs, -1.0, MappingKind::Conventional).is_err());
    }

    #[test]
    fn predict_examples() {
        let zero = LinearLifter::from_weights(DMatrix::zeros(5, 6), 0.0, MappingKind::Canonical).unwrap();
        let x = sn(vec![[0.3, 0.1], [-0.2, 0.4]]);
        let p = predict(&zero, &x).unwrap();
        assert_eq!(p.frame(), Frame::CanonicalCamera);
        assert!(p.joints().iter().all(|j| *j == Vector3::zeros()));

        // Bias-free lifter is linear.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut w = DMatrix::from_fn(5, 6, |_, _| rng.random_range(-1.0..1.0));
        w.row_mut(4).fill(0.0);
        let lifter = LinearLifter::from_weights(w, 0.0, MappingKind::Conventional).unwrap();
        let x2 = sn(vec![[0.9, 0.3], [-0.6, 1.2]]);
        let (a, b) = (predict(&lifter, &x).unwrap(), predict(&lifter, &x2).unwrap());
        for (p, q) in a.joints().iter().zip(b.joints()) {
            assert!((p * 3.0 - q).norm() < 1e-12);
        }

        let wrong_space = Pose2D::from_arrays(&[[0.0, 0.0], [1.0, 1.0]], Space::Image).unwrap();
        assert!(predict(&zero, &wrong_space).is_err());
        let wrong_j = sn(vec![[0.0, 0.0]]);
        assert!(matches!(predict(&zero, &wrong_j), Err(Error::Dimension(_))));
        assert!(LinearLifter::from_weights(DMatrix::zeros(4, 6), 0.0, MappingKind::Canonical).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg = LiftingStudyConfig::from_json_str(r#"{"n_train": 500, "seed": 3}"#).unwrap();
        assert_eq!(cfg.n_train, 500);
        assert_eq!(cfg.n_test, LiftingStudyConfig::default().n_test);
        assert!(LiftingStudyConfig::from_json_str(r#"{"n_train": 0}"#).is_err());
        assert!(LiftingStudyConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
        let overlapping = r#"{"test_root_region": {"min": [0.0, 0.0, 3.0], "max": [0.5, 0.5, 5.0]}}"#;
        assert!(LiftingStudyConfig::from_json_str(overlapping).is_err());
        let text = serde_json::to_string(&LiftingStudyConfig::default()).unwrap();
        assert_eq!(LiftingStudyConfig::from_json_str(&text).unwrap(), LiftingStudyConfig::default());
    }

    #[test]
    fn small_study_is_deterministic() {
        let cfg = LiftingStudyConfig {
            n_train: 600,
            n_test: 200,
            ..LiftingStudyConfig::default()
        };
        let s = Skeleton::h36m17();
        let a = run_study(&cfg, &s).unwrap();
        let b = run_study(&cfg, &s).unwrap();
        assert_eq!(a, b);
        assert!(a.shift.canonical_without_back_transform_mpjpe_mm > a.shift.canonical.mpjpe_mm);
    }
}

//! Pose-error metrics and batch evaluation against a generated dataset.
//!
//! Translation error is the Euclidean distance between predicted and true
//! box origin. Rotation error is the geodesic angle of `R̂·S·Rᵀ`, minimized
//! over a symmetry set `S` (by default the identity and the 180° yaw under
//! which a rectangular box looks the same).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{read_meta, sample_dir, DatasetError, META_FILE};
use crate::linalg::{Mat3, Vec3};
use crate::sampling::rotation_deviation;
use crate::scalar::Real;

/// Rotations within this deviation from orthonormal are used as given.
pub const ROTATION_TOL: f64 = 1e-6;
/// Rotations within this deviation are projected onto the nearest rotation;
/// anything further off is rejected.
pub const ROTATION_REPAIR_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("{what} is not a rotation (deviation {deviation:e})")]
    NotRotation { what: String, deviation: f64 },
    #[error("symmetry set is empty")]
    EmptySymmetry,
    #[error("duplicate prediction for sample {0}")]
    DuplicateIndex(u64),
    #[error("no ground truth for sample {index} ({path})")]
    MissingSample { index: u64, path: String },
    #[error("no predictions to evaluate")]
    NoPredictions,
    #[error("malformed predictions: {0}")]
    MalformedPredictions(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// `‖t̂ - t‖₂` in the inputs' units.
pub fn translation_error<T: Real>(t_hat: Vec3<T>, t: Vec3<T>) -> Result<T, MetricsError> {
    if !t_hat.is_finite() || !t.is_finite() {
        return Err(MetricsError::NonFinite("translation"));
    }
    Ok((t_hat - t).norm())
}

/// Rotation about +Z by π, written out exactly.
pub fn yaw_pi<T: Real>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    Mat3::from_rows([[-o, z, z], [z, -o, z], [z, z, o]])
}

/// The default symmetry set: identity and yaw by π.
pub fn box_symmetry<T: Real>() -> Vec<Mat3<T>> {
    vec![Mat3::identity(), yaw_pi()]
}

/// Rotation angle of `m`, in `[0, π]`.
///
/// Evaluates `arccos((tr m - 1) / 2)` in the equivalent form
/// `atan2(|axis(m)| / 2, (tr m - 1) / 2)`, which has full precision at
/// every angle and gives exactly zero when `m` is symmetric.
pub fn rotation_angle<T: Real>(m: &Mat3<T>) -> T {
    let a = &m.m;
    let axis = Vec3::new(a[2][1] - a[1][2], a[0][2] - a[2][0], a[1][0] - a[0][1]);
    let sin = axis.norm() * T::half();
    let cos = ((m.trace() - T::one()) * T::half()).max(-T::one()).min(T::one());
    sin.atan2(cos)
}

/// Checks a rotation input: returned unchanged when orthonormal within
/// [`ROTATION_TOL`], projected onto the nearest rotation within
/// [`ROTATION_REPAIR_TOL`], rejected otherwise.
pub fn validate_rotation<T: Real>(r: &Mat3<T>, what: &str) -> Result<Mat3<T>, MetricsError> {
    let dev = rotation_deviation(r);
    let reject = |deviation: f64| MetricsError::NotRotation {
        what: what.to_string(),
        deviation,
    };
    if dev <= T::lit(ROTATION_TOL) {
        return Ok(*r);
    }
    if dev <= T::lit(ROTATION_REPAIR_TOL) {
        return r.nearest_rotation().ok_or_else(|| reject(dev.as_f64()));
    }
    Err(reject(dev.as_f64()))
}

/// `min over S of angle(R̂·S·Rᵀ)`, in radians.
pub fn rotation_error<T: Real>(r_hat: &Mat3<T>, r: &Mat3<T>, symmetry: &[Mat3<T>]) -> Result<T, MetricsError> {
    if symmetry.is_empty() {
        return Err(MetricsError::EmptySymmetry);
    }
    let r_hat = validate_rotation(r_hat, "predicted rotation")?;
    let r = validate_rotation(r, "true rotation")?;
    let rt = r.transpose();
    let mut best = T::infinity();
    for s in symmetry {
        best = best.min(rotation_angle(&(r_hat * *s * rt)));
    }
    Ok(best)
}

/// One predicted box pose. `rotation` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosePrediction {
    pub sample_index: u64,
    pub translation: [f64; 3],
    pub rotation: [f64; 9],
}

impl PosePrediction {
    pub fn new(sample_index: u64, translation: Vec3<f64>, rotation: &Mat3<f64>) -> Self {
        Self {
            sample_index,
            translation: translation.to_f64(),
            rotation: rotation.to_row_major(),
        }
    }
}

pub fn parse_predictions(text: &str) -> Result<Vec<PosePrediction>, MetricsError> {
    serde_json::from_str(text).map_err(|e| MetricsError::MalformedPredictions(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleError {
    pub sample_index: u64,
    /// Millimeters.
    pub te_mm: f64,
    /// Radians.
    pub re_rad: f64,
}

/// Table-style summary: mean translation error in millimeters and mean
/// rotation error in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub count: usize,
    pub mean_te_mm: f64,
    pub mean_re_rad: f64,
    pub per_sample: Vec<SampleError>,
}

impl EvalSummary {
    /// Means are accumulated in ascending sample order.
    pub fn from_errors(mut per_sample: Vec<SampleError>) -> Self {
        per_sample.sort_by_key(|e| e.sample_index);
        let n = per_sample.len() as f64;
        let mean_te_mm = per_sample.iter().map(|e| e.te_mm).sum::<f64>() / n;
        let mean_re_rad = per_sample.iter().map(|e| e.re_rad).sum::<f64>() / n;
        Self {
            count: per_sample.len(),
            mean_te_mm,
            mean_re_rad,
            per_sample,
        }
    }

    pub fn table(&self) -> String {
        format!(
            "{:<10} {:>14} {:>14}\n{:<10} {:>14.3} {:>14.3}\n",
            "samples", "e_TE [mm]", "e_RE [rad]", self.count, self.mean_te_mm, self.mean_re_rad
        )
    }
}

/// Scores predictions against the ground truth of the dataset at `root`.
/// Fails without a partial summary on duplicate indices or missing samples.
pub fn evaluate(
    predictions: &[PosePrediction],
    root: &Path,
    symmetry: &[Mat3<f64>],
) -> Result<EvalSummary, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::NoPredictions);
    }
    let mut by_index = BTreeMap::new();
    for p in predictions {
        if by_index.insert(p.sample_index, p).is_some() {
            return Err(MetricsError::DuplicateIndex(p.sample_index));
        }
    }
    let mut errors = Vec::with_capacity(by_index.len());
    for (&index, pred) in &by_index {
        let dir = sample_dir(root, index);
        if !dir.join(META_FILE).is_file() {
            return Err(MetricsError::MissingSample {
                index,
                path: dir.display().to_string(),
            });
        }
        let truth = read_meta(&dir)?.volume_box;
        let te = translation_error(Vec3::from_f64(pred.translation), truth.center)?;
        let re = rotation_error(&Mat3::from_row_major(pred.rotation), &truth.rotation(), symmetry)?;
        errors.push(SampleError {
            sample_index: index,
            te_mm: te * 1000.0,
            re_rad: re,
        });
    }
    Ok(EvalSummary::from_errors(errors))
}

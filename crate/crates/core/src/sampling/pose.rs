use thiserror::Error;

use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum PoseError {
    #[error("look-at eye coincides with target")]
    EyeAtTarget,
    #[error("matrix is not a rigid transform (max deviation {0:e})")]
    NotRigid(f64),
}

/// Rigid transform `x -> rotation * x + translation`.
///
/// A camera-to-world pose uses the camera convention X right, Y down,
/// Z forward, so the third rotation column is the viewing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose<T: Real> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> RigidPose<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zero(),
        }
    }

    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Self {
        Self { rotation, translation }
    }

    /// Rotation by `angle` about world +Z through the origin.
    pub fn yaw(angle: T) -> Self {
        Self::new(Mat3::rot_z(angle), Vec3::zero())
    }

    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(self.rotation * other.rotation, self.transform_point(other.translation))
    }

    /// Viewing direction of a camera pose.
    pub fn forward(&self) -> Vec3<T> {
        self.rotation.col(2)
    }

    /// Row-major homogeneous 4x4 matrix.
    pub fn to_matrix4(&self) -> [T; 16] {
        let r = &self.rotation.m;
        let t = self.translation;
        let (z, o) = (T::zero(), T::one());
        [
            r[0][0], r[0][1], r[0][2], t.x, //
            r[1][0], r[1][1], r[1][2], t.y, //
            r[2][0], r[2][1], r[2][2], t.z, //
            z, z, z, o,
        ]
    }

    /// Inverse of [`Self::to_matrix4`]; the rotation block must be
    /// orthonormal with determinant +1 within `tol` and the last row exact.
    pub fn from_matrix4(m: &[T; 16], tol: T) -> Result<Self, PoseError> {
        let rotation = Mat3::from_rows([[m[0], m[1], m[2]], [m[4], m[5], m[6]], [m[8], m[9], m[10]]]);
        let pose = Self::new(rotation, Vec3::new(m[3], m[7], m[11]));
        let last = [m[12], m[13], m[14], m[15] - T::one()];
        let dev = rotation_deviation(&rotation).max(last.iter().fold(T::zero(), |a, v| a.max(v.abs())));
        if !(dev <= tol) {
            return Err(PoseError::NotRigid(dev.as_f64()));
        }
        Ok(pose)
    }

    pub fn is_valid(&self, tol: T) -> bool {
        self.translation.is_finite() && rotation_deviation(&self.rotation) <= tol
    }

    pub fn cast<U: Real>(&self) -> RigidPose<U> {
        RigidPose::new(self.rotation.cast(), self.translation.cast())
    }
}

/// Largest of `|RᵀR - I|` entries and `|det R - 1|`; NaN for non-finite input.
pub fn rotation_deviation<T: Real>(r: &Mat3<T>) -> T {
    if !r.is_finite() {
        return T::nan();
    }
    let gram = r.transpose() * *r;
    gram.max_abs_diff(&Mat3::identity()).max((r.det() - T::one()).abs())
}

/// Camera pose at `eye` looking at `target` (X right, Y down, Z forward).
///
/// `up` only orients the roll: image "up" (-Y) lies in the plane of `up`
/// and the viewing direction. When the view is within 1e-6 of parallel to
/// `up`, world +Y serves as the hint instead.
pub fn look_at<T: Real>(eye: Vec3<T>, target: Vec3<T>, up: Vec3<T>) -> Result<RigidPose<T>, PoseError> {
    let forward = (target - eye).try_normalize().ok_or(PoseError::EyeAtTarget)?;
    let mut hint = up.try_normalize().unwrap_or_else(Vec3::unit_z);
    if forward.dot(hint).abs() > T::one() - T::lit(1e-6) {
        hint = Vec3::unit_y();
        // Looking straight along +-Y falls back once more.
        if forward.dot(hint).abs() > T::one() - T::lit(1e-6) {
            hint = Vec3::unit_z();
        }
    }
    let right = forward.cross(hint).normalize();
    let down = forward.cross(right);
    Ok(RigidPose::new(Mat3::from_cols(right, down, forward), eye))
}

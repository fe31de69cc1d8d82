//! Size/origin normalization and least-squares rigid alignment of skeletons.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::skeleton::SkeletonFrame;

/// Tolerance used when checking that a matrix is a proper rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Ratio of second to first singular value below which anchors count as collinear.
const COLLINEAR_RATIO: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("all joints coincide; scale is undefined")]
    DegenerateFrame,
    #[error("anchors are collinear; rotation about the anchor line is undetermined")]
    CollinearAnchors,
    #[error("rotation matrix is not orthonormal with det +1 ({0})")]
    InvalidRotation(String),
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("point sets differ in size ({0} vs {1}) or have fewer than 3 points")]
    PointCount(usize, usize),
}

/// `p ↦ scale · rotation · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    scale: f64,
}

impl RigidTransform {
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        scale: f64,
    ) -> Result<Self, RegistrationError> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        let det = rotation.determinant();
        let within = |err: f64| err <= ROTATION_TOLERANCE;
        if !within(ortho) || !within((det - 1.0).abs()) {
            return Err(RegistrationError::InvalidRotation(format!(
                "orthonormality error {ortho:e}, det {det}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(RegistrationError::InvalidScale(scale));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(RegistrationError::InvalidRotation(
                "non-finite translation".into(),
            ));
        }
        Ok(Self {
            rotation,
            translation,
            scale,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            scale: 1.0,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            translation,
            ..Self::identity()
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p * self.scale + self.translation
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation * self.scale + self.translation,
            scale: self.scale * first.scale,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
            scale: 1.0 / self.scale,
        }
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn apply_transform(frame: &SkeletonFrame, t: &RigidTransform) -> SkeletonFrame {
    SkeletonFrame {
        t: frame.t,
        positions: frame.positions.iter().map(|p| t.apply(p)).collect(),
    }
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Centers the frame on its joint centroid and scales it to unit RMS radius.
pub fn normalize(
    frame: &SkeletonFrame,
) -> Result<(SkeletonFrame, RigidTransform), RegistrationError> {
    if frame.positions.len() < 2 {
        return Err(RegistrationError::DegenerateFrame);
    }
    let c = centroid(&frame.positions);
    let mean_sq = frame
        .positions
        .iter()
        .map(|p| (p - c).norm_squared())
        .sum::<f64>()
        / frame.positions.len() as f64;
    let rms = mean_sq.sqrt();
    if rms.is_nan() || rms <= 0.0 || !rms.is_finite() {
        return Err(RegistrationError::DegenerateFrame);
    }
    let transform = RigidTransform {
        rotation: Matrix3::identity(),
        translation: -c / rms,
        scale: 1.0 / rms,
    };
    let out = SkeletonFrame {
        t: frame.t,
        positions: frame.positions.iter().map(|p| (p - c) / rms).collect(),
    };
    Ok((out, transform))
}

/// Result of a least-squares alignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub transform: RigidTransform,
    /// Sum of squared distances between transformed source and target points.
    pub residual: f64,
}

/// Sum of squared distances between `t(source_i)` and `target_i`.
pub fn residual(t: &RigidTransform, source: &[Vector3<f64>], target: &[Vector3<f64>]) -> f64 {
    source
        .iter()
        .zip(target)
        .map(|(s, d)| (t.apply(s) - d).norm_squared())
        .sum()
}

/// Closed-form least-squares similarity/rigid registration of paired points
/// (Kabsch, with Umeyama's scale when `with_scale`).
///
/// A reflection in the optimal orthogonal factor is removed by flipping the
/// sign of the weakest singular direction, so the result always has det +1.
pub fn align_points(
    source: &[Vector3<f64>],
    target: &[Vector3<f64>],
    with_scale: bool,
) -> Result<Alignment, RegistrationError> {
    if source.len() != target.len() || source.len() < 3 {
        return Err(RegistrationError::PointCount(source.len(), target.len()));
    }
    let n = source.len() as f64;
    let cs = centroid(source);
    let ct = centroid(target);

    let mut spread = Matrix3::zeros();
    let mut cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, d) in source.iter().zip(target) {
        let s0 = s - cs;
        let d0 = d - ct;
        spread += s0 * s0.transpose();
        cov += d0 * s0.transpose();
        var_s += s0.norm_squared();
    }
    cov /= n;
    var_s /= n;

    let mut sv = spread.symmetric_eigenvalues().as_slice().to_vec();
    sv.sort_by(|a, b| b.total_cmp(a));
    // eigenvalues of the scatter matrix are squared singular values
    if sv[0].is_nan() || sv[0] <= 0.0 || sv[1].max(0.0).sqrt() <= COLLINEAR_RATIO * sv[0].sqrt() {
        return Err(RegistrationError::CollinearAnchors);
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let d = svd.singular_values;

    let mut signs = Vector3::new(1.0, 1.0, 1.0);
    if (u * v_t).determinant() < 0.0 {
        let weakest = d.imin();
        signs[weakest] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&signs) * v_t;
    let scale = if with_scale {
        d.component_mul(&signs).sum() / var_s
    } else {
        1.0
    };
    let translation = ct - rotation * cs * scale;
    let transform = RigidTransform {
        rotation,
        translation,
        scale,
    };
    Ok(Alignment {
        residual: residual(&transform, source, target),
        transform,
    })
}

/// Aligns the four labeled shoulder/hip anchors of `source` onto `target`.
/// Both arrays are in [`crate::skeleton::AnchorRole::ALL`] order.
pub fn rigid_align(
    source: &[Vector3<f64>; 4],
    target: &[Vector3<f64>; 4],
    with_scale: bool,
) -> Result<Alignment, RegistrationError> {
    align_points(source, target, with_scale)
}

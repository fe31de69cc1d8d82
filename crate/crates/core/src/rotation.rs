//! Euler angle conventions and conversions to and from rotation matrices.
//!
//! Only Tait-Bryan orders (three distinct axes) are supported. For an
//! intrinsic convention with axis order `[a, b, c]` the rotation is
//! `R = R_a(θa) · R_b(θb) · R_c(θc)`: rotate about `a`, then about the
//! rotated `b`, then about the twice-rotated `c`. The extrinsic convention
//! with the same order applies the same elementary rotations about fixed
//! world axes, giving `R = R_c(θc) · R_b(θb) · R_a(θa)`.
//!
//! Angles are stored per axis name (`x`, `y`, `z`), not per position in the
//! order, so a triple reads the same under every convention.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Orthonormality tolerance accepted by [`rotation_to_euler`].
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

/// Below this value of `cos(middle)` the decomposition is treated as gimbal-locked.
const GIMBAL_COS_EPS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("matrix is not a rotation: {0}")]
    NotARotation(String),
    #[error("axis order must name three distinct axes, got `{0}`")]
    InvalidAxisOrder(String),
    #[error("unknown rotation convention `{0}`")]
    UnknownConvention(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }

    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

impl FromStr for Axis {
    type Err = RotationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next().and_then(Axis::from_char), chars.next()) {
            (Some(a), None) => Ok(a),
            _ => Err(RotationError::InvalidAxisOrder(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationMode {
    Intrinsic,
    Extrinsic,
}

/// Axis order plus intrinsic/extrinsic interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RotationConvention {
    order: [Axis; 3],
    mode: RotationMode,
}

impl RotationConvention {
    pub fn new(order: [Axis; 3], mode: RotationMode) -> Result<Self, RotationError> {
        if order[0] == order[1] || order[1] == order[2] || order[0] == order[2] {
            return Err(RotationError::InvalidAxisOrder(format!(
                "{}{}{}",
                order[0], order[1], order[2]
            )));
        }
        Ok(Self { order, mode })
    }

    pub fn intrinsic(order: [Axis; 3]) -> Result<Self, RotationError> {
        Self::new(order, RotationMode::Intrinsic)
    }

    pub fn extrinsic(order: [Axis; 3]) -> Result<Self, RotationError> {
        Self::new(order, RotationMode::Extrinsic)
    }

    pub fn order(&self) -> [Axis; 3] {
        self.order
    }

    pub fn mode(&self) -> RotationMode {
        self.mode
    }

    /// The axis whose angle is restricted to [-90, 90] in the principal branch.
    pub fn middle_axis(&self) -> Axis {
        self.order[1]
    }

    /// All twelve Tait-Bryan conventions.
    pub fn all() -> Vec<Self> {
        use Axis::*;
        let orders = [
            [X, Y, Z],
            [X, Z, Y],
            [Y, X, Z],
            [Y, Z, X],
            [Z, X, Y],
            [Z, Y, X],
        ];
        let mut out = Vec::with_capacity(12);
        for mode in [RotationMode::Intrinsic, RotationMode::Extrinsic] {
            for order in orders {
                out.push(Self { order, mode });
            }
        }
        out
    }

    /// Order of factors in the matrix product, left to right.
    fn product_order(&self) -> [Axis; 3] {
        match self.mode {
            RotationMode::Intrinsic => self.order,
            RotationMode::Extrinsic => [self.order[2], self.order[1], self.order[0]],
        }
    }
}

impl Default for RotationConvention {
    /// Intrinsic Z-X-Y.
    fn default() -> Self {
        Self {
            order: [Axis::Z, Axis::X, Axis::Y],
            mode: RotationMode::Intrinsic,
        }
    }
}

impl fmt::Display for RotationConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            RotationMode::Intrinsic => "intrinsic",
            RotationMode::Extrinsic => "extrinsic",
        };
        write!(
            f,
            "{mode}-{}{}{}",
            self.order[0], self.order[1], self.order[2]
        )
    }
}

impl FromStr for RotationConvention {
    type Err = RotationError;

    /// Accepts `intrinsic-ZXY`, `extrinsic-xyz` or a bare order (intrinsic).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (mode, order) = match lower.split_once(['-', ':']) {
            Some(("intrinsic", o)) => (RotationMode::Intrinsic, o),
            Some(("extrinsic", o)) => (RotationMode::Extrinsic, o),
            Some(_) => return Err(RotationError::UnknownConvention(s.to_string())),
            None => (RotationMode::Intrinsic, lower.as_str()),
        };
        let axes: Vec<Axis> = order.chars().filter_map(Axis::from_char).collect();
        if axes.len() != 3 || order.chars().count() != 3 {
            return Err(RotationError::InvalidAxisOrder(order.to_string()));
        }
        Self::new([axes[0], axes[1], axes[2]], mode)
    }
}

impl Serialize for RotationConvention {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RotationConvention {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An orientation triple in degrees, keyed by axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EulerAngles {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn set(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::X => self.x = value,
            Axis::Y => self.y = value,
            Axis::Z => self.z = value,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Every component wrapped into (-180, 180].
    pub fn normalized(&self) -> Self {
        Self::new(wrap_deg(self.x), wrap_deg(self.y), wrap_deg(self.z))
    }

    /// The other Tait-Bryan branch describing the same rotation:
    /// outer angles shifted by 180°, middle angle replaced by 180° minus itself.
    pub fn alternate(&self, convention: &RotationConvention) -> Self {
        let mut out = *self;
        let [first, middle, last] = convention.order();
        out.set(first, self.get(first) + 180.0);
        out.set(middle, 180.0 - self.get(middle));
        out.set(last, self.get(last) + 180.0);
        out.normalized()
    }
}

impl fmt::Display for EulerAngles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.2}, {:.2}, {:.2})", self.x, self.y, self.z)
    }
}

/// Wraps degrees into (-180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Elementary right-handed rotation about one axis, angle in radians.
pub fn axis_rotation(axis: Axis, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        Axis::X => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        Axis::Y => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        Axis::Z => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

pub fn euler_to_rotation(e: &EulerAngles, c: &RotationConvention) -> Matrix3<f64> {
    let [a, b, d] = c.product_order();
    axis_rotation(a, e.get(a).to_radians())
        * axis_rotation(b, e.get(b).to_radians())
        * axis_rotation(d, e.get(d).to_radians())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDecomposition {
    pub angles: EulerAngles,
    /// The middle angle sits at ±90°; the last rotation was set to zero and
    /// the free angle assigned to the first.
    pub gimbal_locked: bool,
}

/// Checks `RᵀR = I` and `det R = 1` within [`ORTHONORMAL_TOLERANCE`].
pub fn check_rotation(r: &Matrix3<f64>) -> Result<(), RotationError> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(RotationError::NotARotation("non-finite entry".into()));
    }
    let err = (r.transpose() * r - Matrix3::identity()).abs().max();
    if err > ORTHONORMAL_TOLERANCE {
        return Err(RotationError::NotARotation(format!(
            "orthonormality error {err:e}"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ORTHONORMAL_TOLERANCE {
        return Err(RotationError::NotARotation(format!("determinant {det}")));
    }
    Ok(())
}

/// Decomposes a rotation into the principal Euler branch of `c`
/// (middle angle in [-90, 90], outer angles in (-180, 180]).
pub fn rotation_to_euler(
    r: &Matrix3<f64>,
    c: &RotationConvention,
) -> Result<EulerDecomposition, RotationError> {
    check_rotation(r)?;
    let [first, middle, last] = c.product_order();
    let (i, j, k) = (first.index(), middle.index(), last.index());
    // +1 for cyclic orders (XYZ, YZX, ZXY), -1 otherwise.
    let sign = if (j + 3 - i) % 3 == 1 { 1.0 } else { -1.0 };

    let cos_mid = r[(i, i)].hypot(r[(i, j)]);
    let mid = (sign * r[(i, k)]).atan2(cos_mid);

    let (a_first, a_last, locked) = if cos_mid > GIMBAL_COS_EPS {
        let a_first = (-sign * r[(j, k)]).atan2(r[(k, k)]);
        let a_last = (-sign * r[(i, j)]).atan2(r[(i, i)]);
        (a_first, a_last, false)
    } else {
        // The free angle goes to the convention's first rotation, which is the
        // leftmost factor for intrinsic and the rightmost for extrinsic.
        match c.mode() {
            RotationMode::Intrinsic => ((sign * r[(k, j)]).atan2(r[(j, j)]), 0.0, true),
            RotationMode::Extrinsic => (0.0, (sign * r[(j, i)]).atan2(r[(j, j)]), true),
        }
    };

    let mut angles = EulerAngles::default();
    angles.set(first, wrap_deg(a_first.to_degrees()));
    angles.set(middle, mid.to_degrees());
    angles.set(last, wrap_deg(a_last.to_degrees()));
    Ok(EulerDecomposition {
        angles,
        gimbal_locked: locked,
    })
}

/// Angle of the relative rotation `aᵀ b`, in radians, in [0, π].
///
/// Uses `atan2(|axial vector|, trace - 1)`, which stays accurate near 0 and π.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let rel = a.transpose() * b;
    let v = Vector3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    );
    v.norm().atan2(rel.trace() - 1.0)
}

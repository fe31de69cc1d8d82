//! Synthetic exercise motions with exactly known flexion trajectories.
//!
//! [`generate_trajectory`] produces per-channel ground-truth angles,
//! [`forward_skeleton`] poses the bundled segment skeleton so that the
//! kinematics module recovers those angles, and [`perturb`] moves the result
//! into an arbitrary camera frame with optional noise and dropout.
//!
//! World axes: X forward, Y left, Z up. All motion is in the X-Z plane.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{FlexionSeries, SeriesSource, DEFAULT_CHANNEL_ORDER};
use crate::registration::RigidTransform;
use crate::skeleton::{
    MotionSequence, RecordingMeta, SkeletonError, SkeletonFrame, SkeletonTopology,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid motion profile: {0}")]
    InvalidProfile(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("segment `{0}` must have positive finite length")]
    InvalidLength(&'static str),
    #[error("channel `{channel}` value {value}° cannot be posed (allowed {min}..={max})")]
    AngleOutOfRange {
        channel: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("trajectories do not share one time grid")]
    MisalignedTrajectories,
    #[error("at least one trajectory is required")]
    NoTrajectories,
    #[error("topology has no joint `{0}` or an extra joint that cannot be posed")]
    TopologyMismatch(String),
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileShape {
    /// `A·(1 − cos 2πφ)/2`: trough at phase 0, peak at phase 1/2.
    Sinusoidal,
    /// Quarter-period ramp up, plateau, ramp down, rest.
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    pub shape: ProfileShape,
    pub amplitude_deg: f64,
    pub period_s: f64,
    pub repetitions: u32,
    pub sample_rate_hz: f64,
    pub channels: Vec<String>,
}

impl MotionProfile {
    /// Ten sinusoidal repetitions of both knees, 2 s each at 60 Hz.
    pub fn squat(amplitude_deg: f64) -> Self {
        Self {
            shape: ProfileShape::Sinusoidal,
            amplitude_deg,
            period_s: 2.0,
            repetitions: 10,
            sample_rate_hz: 60.0,
            channels: vec!["knee_right".into(), "knee_left".into()],
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidProfile(m.to_string()));
        if !(self.amplitude_deg > 0.0 && self.amplitude_deg <= 180.0) {
            return bad("amplitude must lie in (0, 180]");
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return bad("period must be positive");
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad("sample rate must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.channels.is_empty() {
            return bad("no channels driven");
        }
        Ok(())
    }

    /// Samples per cycle: a multiple of four so that the peak and the
    /// trapezoid corners fall exactly on samples.
    pub fn samples_per_cycle(&self) -> usize {
        let n = (self.period_s * self.sample_rate_hz / 4.0).round() as usize * 4;
        n.max(4)
    }
}

fn profile_value(shape: ProfileShape, amplitude: f64, m: usize, n: usize) -> f64 {
    let q = n / 4;
    match shape {
        ProfileShape::Sinusoidal => {
            let phase = m as f64 / n as f64;
            amplitude * (1.0 - (2.0 * std::f64::consts::PI * phase).cos()) / 2.0
        }
        ProfileShape::Trapezoid => {
            if m < q {
                amplitude * m as f64 / q as f64
            } else if m <= 2 * q {
                amplitude
            } else if m < 3 * q {
                amplitude * (3 * q - m) as f64 / q as f64
            } else {
                0.0
            }
        }
    }
}

/// Ground-truth angle series, one per driven channel, on a shared grid of
/// `repetitions · n + 1` samples (`n` from [`MotionProfile::samples_per_cycle`]).
pub fn generate_trajectory(p: &MotionProfile) -> Result<Vec<FlexionSeries>, SynthError> {
    p.validate()?;
    let n = p.samples_per_cycle();
    let total = p.repetitions as usize * n + 1;
    let dt = p.period_s / n as f64;
    let samples: Vec<(f64, f64)> = (0..total)
        .map(|k| {
            (
                k as f64 * dt,
                profile_value(p.shape, p.amplitude_deg, k % n, n),
            )
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    p.channels
        .iter()
        .map(|ch| {
            if !seen.insert(ch.as_str()) {
                return Err(SynthError::InvalidProfile(format!(
                    "channel `{ch}` listed twice"
                )));
            }
            Ok(FlexionSeries {
                channel: ch.clone(),
                samples: samples.clone(),
                source: SeriesSource::ReferenceNative,
            })
        })
        .collect()
}

/// Segment lengths of the synthetic body, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimbLengths {
    pub thigh: f64,
    pub shank: f64,
    pub foot: f64,
    pub lower_trunk: f64,
    pub upper_trunk: f64,
    pub head: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    pub hip_half_width: f64,
    pub shoulder_half_width: f64,
}

impl Default for LimbLengths {
    fn default() -> Self {
        Self {
            thigh: 0.45,
            shank: 0.42,
            foot: 0.18,
            lower_trunk: 0.28,
            upper_trunk: 0.25,
            head: 0.22,
            upper_arm: 0.30,
            forearm: 0.27,
            hip_half_width: 0.10,
            shoulder_half_width: 0.18,
        }
    }
}

impl LimbLengths {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fields = [
            ("thigh", self.thigh),
            ("shank", self.shank),
            ("foot", self.foot),
            ("lower_trunk", self.lower_trunk),
            ("upper_trunk", self.upper_trunk),
            ("head", self.head),
            ("upper_arm", self.upper_arm),
            ("forearm", self.forearm),
            ("hip_half_width", self.hip_half_width),
            ("shoulder_half_width", self.shoulder_half_width),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidLength(name));
            }
        }
        Ok(())
    }
}

/// Joints of the bundled segment topology that [`forward_skeleton`] places.
pub const POSED_JOINTS: [&str; 18] = [
    "pelvis",
    "t8",
    "neck",
    "head",
    "r_hip",
    "r_knee",
    "r_ankle",
    "r_toe",
    "l_hip",
    "l_knee",
    "l_ankle",
    "l_toe",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
];

/// Rotates `v` within the X-Z plane by `angle_deg` (X toward Z positive).
fn sagittal(v: Vector3<f64>, angle_deg: f64) -> Vector3<f64> {
    let (s, c) = angle_deg.to_radians().sin_cos();
    Vector3::new(v.x * c - v.z * s, v.y, v.x * s + v.z * c)
}

fn channel_range(channel: &str) -> (f64, f64) {
    if channel.starts_with("ankle") {
        (0.0, 90.0)
    } else {
        (0.0, 180.0)
    }
}

struct Pose {
    knee: [f64; 2],
    ankle: [f64; 2],
    elbow: [f64; 2],
    back_pelvis: f64,
    back_t8: f64,
}

fn place(pose: &Pose, l: &LimbLengths) -> HashMap<&'static str, Vector3<f64>> {
    let down = Vector3::new(0.0, 0.0, -1.0);
    let up = Vector3::new(0.0, 0.0, 1.0);
    let mut p = HashMap::with_capacity(18);
    let pelvis = Vector3::new(0.0, 0.0, l.thigh + l.shank);
    p.insert("pelvis", pelvis);

    for (side, sign, names) in [
        (0usize, -1.0, ["r_hip", "r_knee", "r_ankle", "r_toe"]),
        (1usize, 1.0, ["l_hip", "l_knee", "l_ankle", "l_toe"]),
    ] {
        let knee = pose.knee[side];
        let hip = pelvis + Vector3::new(0.0, sign * l.hip_half_width, 0.0);
        let thigh_dir = Vector3::new(
            (knee / 2.0).to_radians().sin(),
            0.0,
            -(knee / 2.0).to_radians().cos(),
        );
        let shank_dir = Vector3::new(
            -(knee / 2.0).to_radians().sin(),
            0.0,
            -(knee / 2.0).to_radians().cos(),
        );
        let foot_dir = sagittal(shank_dir, 90.0 + pose.ankle[side]);
        let knee_p = hip + thigh_dir * l.thigh;
        let ankle_p = knee_p + shank_dir * l.shank;
        p.insert(names[0], hip);
        p.insert(names[1], knee_p);
        p.insert(names[2], ankle_p);
        p.insert(names[3], ankle_p + foot_dir * l.foot);
    }

    let lower = sagittal(up, -pose.back_pelvis);
    let upper = sagittal(up, -pose.back_t8);
    let t8 = pelvis + lower * l.lower_trunk;
    let neck = t8 + upper * l.upper_trunk;
    p.insert("t8", t8);
    p.insert("neck", neck);
    p.insert("head", neck + upper * l.head);

    for (side, sign, names) in [
        (0usize, -1.0, ["r_shoulder", "r_elbow", "r_wrist"]),
        (1usize, 1.0, ["l_shoulder", "l_elbow", "l_wrist"]),
    ] {
        let shoulder = neck + Vector3::new(0.0, sign * l.shoulder_half_width, 0.0);
        let elbow = shoulder + down * l.upper_arm;
        let forearm = sagittal(down, -pose.elbow[side]);
        p.insert(names[0], shoulder);
        p.insert(names[1], elbow);
        p.insert(names[2], elbow + forearm * l.forearm);
    }
    p
}

/// Poses the segment skeleton so that the default channel specs recover
/// `trajectories` exactly. Channels not listed stay at 0°.
pub fn forward_skeleton(
    trajectories: &[FlexionSeries],
    limbs: &LimbLengths,
    topology: Arc<SkeletonTopology>,
    meta: RecordingMeta,
) -> Result<MotionSequence, SynthError> {
    limbs.validate()?;
    let Some(first) = trajectories.first() else {
        return Err(SynthError::NoTrajectories);
    };
    for tr in trajectories {
        if !DEFAULT_CHANNEL_ORDER.contains(&tr.channel.as_str()) {
            return Err(SynthError::UnknownChannel(tr.channel.clone()));
        }
        if tr.samples.len() != first.samples.len()
            || tr.times().zip(first.times()).any(|(a, b)| a != b)
        {
            return Err(SynthError::MisalignedTrajectories);
        }
        let (min, max) = channel_range(&tr.channel);
        if let Some(&(_, value)) = tr.samples.iter().find(|(_, v)| !(min..=max).contains(v)) {
            return Err(SynthError::AngleOutOfRange {
                channel: tr.channel.clone(),
                value,
                min,
                max,
            });
        }
    }
    if topology.len() != POSED_JOINTS.len() {
        return Err(SynthError::TopologyMismatch(format!(
            "{} joints, expected {}",
            topology.len(),
            POSED_JOINTS.len()
        )));
    }
    let slots: Vec<&'static str> = topology
        .joints()
        .iter()
        .map(|j| {
            POSED_JOINTS
                .iter()
                .copied()
                .find(|p| *p == j.as_str())
                .ok_or_else(|| SynthError::TopologyMismatch(j.to_string()))
        })
        .collect::<Result<_, _>>()?;

    let value = |name: &str, k: usize| {
        trajectories
            .iter()
            .find(|t| t.channel == name)
            .map_or(0.0, |t| t.samples[k].1)
    };
    let frames = (0..first.samples.len())
        .map(|k| {
            let pose = Pose {
                knee: [value("knee_right", k), value("knee_left", k)],
                ankle: [value("ankle_right", k), value("ankle_left", k)],
                elbow: [value("elbow_right", k), value("elbow_left", k)],
                back_pelvis: value("back_pelvis", k),
                back_t8: value("back_t8", k),
            };
            let placed = place(&pose, limbs);
            SkeletonFrame::new(
                first.samples[k].0,
                slots.iter().map(|s| placed[s]).collect(),
            )
        })
        .collect();
    Ok(MotionSequence::new(topology, frames, meta)?)
}

/// Camera pose, body size and estimation error applied to a clean sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub transform: RigidTransform,
    pub scale: f64,
    /// Standard deviation of additive noise per coordinate, meters.
    pub noise_sigma: f64,
    /// Probability that a joint sample is lost; a frame with any lost joint is dropped.
    pub dropout: f64,
}

impl Perturbation {
    pub fn identity() -> Self {
        Self {
            transform: RigidTransform::identity(),
            scale: 1.0,
            noise_sigma: 0.0,
            dropout: 0.0,
        }
    }

    pub fn rigid(transform: RigidTransform) -> Self {
        Self {
            transform,
            ..Self::identity()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(SynthError::InvalidPerturbation(
                "scale must be positive".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SynthError::InvalidPerturbation("sigma must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(SynthError::InvalidPerturbation(
                "dropout must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Applies transform and scale to every frame, then seeded Gaussian noise and
/// frame-level dropout. Deterministic for a given seed.
pub fn perturb(
    seq: &MotionSequence,
    p: &Perturbation,
    seed: u64,
) -> Result<MotionSequence, SynthError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise =
        (p.noise_sigma > 0.0).then(|| Normal::new(0.0, p.noise_sigma).expect("sigma validated"));
    let mut frames = Vec::with_capacity(seq.len());
    for frame in seq.frames() {
        let mut positions: Vec<Vector3<f64>> = frame
            .positions
            .iter()
            .map(|x| p.transform.apply(x) * p.scale)
            .collect();
        if let Some(noise) = &noise {
            for x in positions.iter_mut() {
                for c in x.iter_mut() {
                    *c += noise.sample(&mut rng);
                }
            }
        }
        let mut dropped = false;
        if p.dropout > 0.0 {
            for _ in 0..positions.len() {
                dropped |= rng.gen::<f64>() < p.dropout;
            }
        }
        if !dropped {
            frames.push(SkeletonFrame::new(frame.t, positions));
        }
    }
    Ok(seq.with_frames(frames)?)
}

/// A uniformly random rotation with a translation in a ±`max_shift` box.
pub fn random_rigid_transform(rng: &mut impl Rng, max_shift: f64) -> RigidTransform {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    // uniform on SO(3): angle density ∝ (1 − cos θ)
    let angle = loop {
        let a = rng.gen_range(0.0..std::f64::consts::PI);
        if rng.gen::<f64>() * 2.0 <= 1.0 - a.cos() {
            break a;
        }
    };
    let axis = nalgebra::Unit::new_normalize(Vector3::from(axis));
    let rotation: Matrix3<f64> = *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix();
    let translation = Vector3::new(
        rng.gen_range(-max_shift..=max_shift),
        rng.gen_range(-max_shift..=max_shift),
        rng.gen_range(-max_shift..=max_shift),
    );
    RigidTransform::new(rotation, translation, 1.0).expect("rotation from axis-angle is proper")
}

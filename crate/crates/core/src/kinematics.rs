//! Hinge-joint flexion angles.
//!
//! Each joint is treated as a hinge: one world axis is neutralized (its
//! component dropped) and the flexion is the in-plane angle between the
//! proximal and distal segment directions. Parallel segments mean a straight
//! limb, i.e. 0° of flexion.

use std::collections::HashSet;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::{wrap_deg, Axis};
use crate::skeleton::{JointId, MotionSequence, SkeletonTopology};

/// Minimum in-plane length of a projected segment.
pub const MIN_PROJECTION: f64 = 1e-9;

/// Canonical channel order used for reports.
pub const DEFAULT_CHANNEL_ORDER: [&str; 8] = [
    "knee_right",
    "knee_left",
    "ankle_right",
    "ankle_left",
    "back_pelvis",
    "back_t8",
    "elbow_right",
    "elbow_left",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("segment projection onto the plane normal to {0} is degenerate")]
    DegenerateProjection(Axis),
    #[error("unknown joint `{0}`")]
    UnknownJoint(String),
    #[error("channel `{channel}`: {reason}")]
    InvalidSpec { channel: String, reason: String },
    #[error("duplicate channel `{0}`")]
    DuplicateChannel(String),
    #[error("series `{0}` is invalid: {1}")]
    InvalidSeries(String, String),
}

/// Second segment of a hinge: another body segment, or the world vertical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distal {
    Segment(JointId, JointId),
    Vertical(Axis),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointAngleSpec {
    pub name: String,
    /// Segment direction `from → to`.
    pub proximal: (JointId, JointId),
    pub distal: Distal,
    pub neutralized_axis: Axis,
    #[serde(default)]
    pub neutral_offset_deg: f64,
}

impl JointAngleSpec {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |reason: &str| KinematicsError::InvalidSpec {
            channel: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.is_empty() {
            return Err(bad("empty channel name"));
        }
        if self.proximal.0 == self.proximal.1 {
            return Err(bad("proximal segment endpoints coincide"));
        }
        match &self.distal {
            Distal::Segment(a, b) if a == b => {
                return Err(bad("distal segment endpoints coincide"))
            }
            Distal::Vertical(axis) if *axis == self.neutralized_axis => {
                return Err(bad("vertical axis equals the neutralized axis"))
            }
            _ => {}
        }
        if !self.neutral_offset_deg.is_finite() {
            return Err(bad("neutral offset is not finite"));
        }
        Ok(())
    }
}

/// Validates each spec and checks channel names are unique.
pub fn validate_specs(specs: &[JointAngleSpec]) -> Result<(), KinematicsError> {
    let mut names = HashSet::new();
    for spec in specs {
        spec.validate()?;
        if !names.insert(spec.name.as_str()) {
            return Err(KinematicsError::DuplicateChannel(spec.name.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesSource {
    ReferenceNative,
    ReferenceSkeleton,
    EstimatedSkeleton,
}

/// A timestamped angle channel in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct FlexionSeries {
    pub channel: String,
    pub samples: Vec<(f64, f64)>,
    pub source: SeriesSource,
}

impl FlexionSeries {
    pub fn new(
        channel: impl Into<String>,
        samples: Vec<(f64, f64)>,
        source: SeriesSource,
    ) -> Result<Self, KinematicsError> {
        let channel = channel.into();
        for (i, &(t, a)) in samples.iter().enumerate() {
            if !t.is_finite() || !a.is_finite() {
                return Err(KinematicsError::InvalidSeries(
                    channel,
                    format!("non-finite sample {i}"),
                ));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(KinematicsError::InvalidSeries(
                    channel,
                    format!("timestamps not increasing at sample {i}"),
                ));
            }
        }
        Ok(Self {
            channel,
            samples,
            source,
        })
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Drops the neutralized component, keeping the other two in cyclic order.
fn project(v: &Vector3<f64>, neutralized: Axis) -> Vector2<f64> {
    let i = neutralized.index();
    Vector2::new(v[(i + 1) % 3], v[(i + 2) % 3])
}

/// Unsigned in-plane angle between two vectors, degrees in [0, 180].
fn planar_angle(
    u: &Vector3<f64>,
    v: &Vector3<f64>,
    neutralized: Axis,
) -> Result<f64, KinematicsError> {
    let a = project(u, neutralized);
    let b = project(v, neutralized);
    if a.norm() <= MIN_PROJECTION || b.norm() <= MIN_PROJECTION {
        return Err(KinematicsError::DegenerateProjection(neutralized));
    }
    let cross = a.x * b.y - a.y * b.x;
    Ok(cross.abs().atan2(a.dot(&b)).to_degrees())
}

/// Flexion between proximal direction `u` and distal direction `v`, minus
/// `neutral_offset_deg`, folded into [0, 180].
pub fn hinge_flexion(
    u: &Vector3<f64>,
    v: &Vector3<f64>,
    neutralized: Axis,
    neutral_offset_deg: f64,
) -> Result<f64, KinematicsError> {
    let raw = planar_angle(u, v, neutralized)?;
    Ok(wrap_deg(raw - neutral_offset_deg).abs())
}

/// Angle in [0, 180] between the projected segment and the +vertical axis.
pub fn vertical_inclination(
    segment: &Vector3<f64>,
    vertical: Axis,
    neutralized: Axis,
) -> Result<f64, KinematicsError> {
    if vertical == neutralized {
        return Err(KinematicsError::DegenerateProjection(neutralized));
    }
    planar_angle(segment, &vertical.unit(), neutralized)
}

/// Per-channel output of [`flexion_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub series: FlexionSeries,
    /// Frames skipped because a segment projected to (near) zero length.
    pub degenerate_frames: usize,
}

struct Resolved {
    proximal: (usize, usize),
    distal: ResolvedDistal,
}

enum ResolvedDistal {
    Segment(usize, usize),
    Vertical(Axis),
}

fn resolve(topology: &SkeletonTopology, id: &JointId) -> Result<usize, KinematicsError> {
    topology
        .index_of_id(id)
        .ok_or_else(|| KinematicsError::UnknownJoint(id.to_string()))
}

/// One series per spec with one sample per frame; degenerate frames become gaps.
pub fn flexion_series(
    seq: &MotionSequence,
    specs: &[JointAngleSpec],
    source: SeriesSource,
) -> Result<Vec<ChannelOutput>, KinematicsError> {
    validate_specs(specs)?;
    let topology = seq.topology();
    let resolved = specs
        .iter()
        .map(|spec| {
            Ok(Resolved {
                proximal: (
                    resolve(topology, &spec.proximal.0)?,
                    resolve(topology, &spec.proximal.1)?,
                ),
                distal: match &spec.distal {
                    Distal::Segment(a, b) => {
                        ResolvedDistal::Segment(resolve(topology, a)?, resolve(topology, b)?)
                    }
                    Distal::Vertical(axis) => ResolvedDistal::Vertical(*axis),
                },
            })
        })
        .collect::<Result<Vec<_>, KinematicsError>>()?;

    Ok(specs
        .iter()
        .zip(&resolved)
        .map(|(spec, r)| {
            let mut samples = Vec::with_capacity(seq.len());
            let mut degenerate_frames = 0;
            for frame in seq.frames() {
                let p = &frame.positions;
                let u = p[r.proximal.1] - p[r.proximal.0];
                let angle = match r.distal {
                    ResolvedDistal::Segment(a, b) => hinge_flexion(
                        &u,
                        &(p[b] - p[a]),
                        spec.neutralized_axis,
                        spec.neutral_offset_deg,
                    ),
                    ResolvedDistal::Vertical(axis) => {
                        vertical_inclination(&u, axis, spec.neutralized_axis)
                            .map(|a| wrap_deg(a - spec.neutral_offset_deg).abs())
                    }
                };
                match angle {
                    Ok(a) => samples.push((frame.t, a)),
                    Err(_) => degenerate_frames += 1,
                }
            }
            ChannelOutput {
                series: FlexionSeries {
                    channel: spec.name.clone(),
                    samples,
                    source,
                },
                degenerate_frames,
            }
        })
        .collect())
}

/// Sorts channels into the canonical report order; unknown channels go last, by name.
pub fn channel_rank(name: &str) -> (usize, String) {
    match DEFAULT_CHANNEL_ORDER.iter().position(|c| *c == name) {
        Some(i) => (i, String::new()),
        None => (DEFAULT_CHANNEL_ORDER.len(), name.to_string()),
    }
}

//! Detection and repair of Euler-branch flips in orientation streams.
//!
//! A Tait-Bryan triple and its alternate branch (outer angles ±180°, middle
//! angle mirrored about 90°) describe the same rotation. Some exporters
//! switch branch when the middle angle crosses ±90°, which shows up as a
//! sudden ~180° jump on two axes while the orientation itself barely moves.
//! [`detect_flips`] separates such jumps from genuine motion using the
//! geodesic distance; [`canonicalize`] picks, sample by sample, the
//! representation closest to the previous output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::{
    euler_to_rotation, rotation_angle_between, wrap_deg, EulerAngles, RotationConvention,
};

/// Per-axis jump (after wrapping) that makes a transition suspicious.
pub const DEFAULT_JUMP_THRESHOLD_DEG: f64 = 90.0;
/// Largest rotation across a suspicious transition that still counts as a
/// representation flip rather than real motion.
pub const DEFAULT_FLIP_TOLERANCE_DEG: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnomalyError {
    #[error("series needs at least {needed} samples, has {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("sample {0} is invalid: {1}")]
    InvalidSample(usize, String),
}

/// Orientation samples `(t, angles)` under one convention.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerSeries {
    pub samples: Vec<(f64, EulerAngles)>,
    pub convention: RotationConvention,
}

impl EulerSeries {
    pub fn new(
        samples: Vec<(f64, EulerAngles)>,
        convention: RotationConvention,
    ) -> Result<Self, AnomalyError> {
        for (i, (t, e)) in samples.iter().enumerate() {
            if !t.is_finite() || !e.is_finite() {
                return Err(AnomalyError::InvalidSample(i, "non-finite value".into()));
            }
            if i > 0 && *t <= samples[i - 1].0 {
                return Err(AnomalyError::InvalidSample(
                    i,
                    "timestamps must strictly increase".into(),
                ));
            }
        }
        Ok(Self {
            samples,
            convention,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyKind {
    RepresentationFlip,
    GenuineDiscontinuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    /// The transition runs from sample `from_index` to `from_index + 1`.
    pub from_index: usize,
    pub t_from: f64,
    pub t_to: f64,
    /// Absolute wrapped per-axis jumps (x, y, z), degrees.
    pub jump_deg: [f64; 3],
    pub geodesic_deg: f64,
    pub kind: AnomalyKind,
    /// x angle of the sample after the transition.
    pub x_at_transition: f64,
}

/// Rotation angle between two orientations, degrees in [0, 180].
pub fn geodesic_distance(a: &EulerAngles, b: &EulerAngles, c: &RotationConvention) -> f64 {
    rotation_angle_between(&euler_to_rotation(a, c), &euler_to_rotation(b, c)).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipThresholds {
    pub jump_threshold_deg: f64,
    pub flip_tolerance_deg: f64,
}

impl Default for FlipThresholds {
    fn default() -> Self {
        Self {
            jump_threshold_deg: DEFAULT_JUMP_THRESHOLD_DEG,
            flip_tolerance_deg: DEFAULT_FLIP_TOLERANCE_DEG,
        }
    }
}

pub fn detect_flips(
    s: &EulerSeries,
    thresholds: FlipThresholds,
) -> Result<Vec<AnomalyEvent>, AnomalyError> {
    if s.len() < 2 {
        return Err(AnomalyError::TooShort {
            needed: 2,
            actual: s.len(),
        });
    }
    let mut events = Vec::new();
    for (i, pair) in s.samples.windows(2).enumerate() {
        let (t0, a) = pair[0];
        let (t1, b) = pair[1];
        let jump_deg = [
            wrap_deg(b.x - a.x).abs(),
            wrap_deg(b.y - a.y).abs(),
            wrap_deg(b.z - a.z).abs(),
        ];
        if jump_deg.iter().all(|j| *j < thresholds.jump_threshold_deg) {
            continue;
        }
        let geodesic_deg = geodesic_distance(&a, &b, &s.convention);
        let kind = if geodesic_deg <= thresholds.flip_tolerance_deg {
            AnomalyKind::RepresentationFlip
        } else {
            AnomalyKind::GenuineDiscontinuity
        };
        events.push(AnomalyEvent {
            from_index: i,
            t_from: t0,
            t_to: t1,
            jump_deg,
            geodesic_deg,
            kind,
            x_at_transition: b.x,
        });
    }
    Ok(events)
}

fn unwrap_towards(value: f64, reference: f64) -> f64 {
    value + 360.0 * ((reference - value) / 360.0).round()
}

fn unwrap_all(e: &EulerAngles, prev: &EulerAngles) -> EulerAngles {
    EulerAngles::new(
        unwrap_towards(e.x, prev.x),
        unwrap_towards(e.y, prev.y),
        unwrap_towards(e.z, prev.z),
    )
}

fn max_axis_step(a: &EulerAngles, b: &EulerAngles) -> f64 {
    (a.x - b.x)
        .abs()
        .max((a.y - b.y).abs())
        .max((a.z - b.z).abs())
}

/// Rewrites the series onto a continuous Euler branch.
///
/// The first sample is wrapped into (-180, 180] and, if its middle angle lies
/// outside [-90, 90], replaced by its alternate branch. Every later sample
/// takes whichever of its own triple or its alternate branch, each unwrapped
/// by multiples of 360°, is closest to the previous output in max per-axis
/// distance; ties keep the input branch. Returns the series and the number of
/// samples whose numbers changed.
pub fn canonicalize(s: &EulerSeries) -> (EulerSeries, usize) {
    let c = &s.convention;
    let mut out: Vec<(f64, EulerAngles)> = Vec::with_capacity(s.len());
    let mut repairs = 0;
    for &(t, e) in &s.samples {
        let chosen = match out.last() {
            None => {
                let w = e.normalized();
                if (-90.0..=90.0).contains(&w.get(c.middle_axis())) {
                    w
                } else {
                    w.alternate(c)
                }
            }
            Some((_, prev)) => {
                let own = unwrap_all(&e, prev);
                let alt = unwrap_all(&e.alternate(c), prev);
                if max_axis_step(&alt, prev) < max_axis_step(&own, prev) {
                    alt
                } else {
                    own
                }
            }
        };
        if chosen != e {
            repairs += 1;
        }
        out.push((t, chosen));
    }
    (
        EulerSeries {
            samples: out,
            convention: *c,
        },
        repairs,
    )
}

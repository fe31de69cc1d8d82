//! End-to-end orchestration: registration of an estimated skeleton onto a
//! reference, angle extraction and deviation reports.
//!
//! Registration runs normalize → rigid_align: each frame is centered and
//! scaled to unit RMS radius, then rotated so its shoulder/hip anchors best
//! overlay the normalized reference frame nearest in time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::{canonicalize, AnomalyError, EulerSeries};
use crate::kinematics::{
    flexion_series, FlexionSeries, JointAngleSpec, KinematicsError, SeriesSource,
};
use crate::registration::{
    apply_transform, normalize, rigid_align, RegistrationError, RigidTransform,
};
use crate::rotation::{Axis, EulerAngles, RotationConvention};
use crate::skeleton::{MotionSequence, RecordingMeta, SkeletonError, SkeletonFrame};
use crate::sync::{
    deviation_series, group_report, pair_streams, ComparisonMode, DeviationReport, GroupBy,
    PairingMethod, RecordingDeviations, SyncError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("frame at t={t}: {source}")]
    Registration { t: f64, source: RegistrationError },
    #[error("sequences use different topologies (`{0}` vs `{1}`)")]
    TopologyMismatch(String, String),
    #[error("{0} sequence has no frames")]
    EmptySequence(&'static str),
    #[error("no frame of the reference lies within {max_gap} s of t={t}")]
    NoReferenceFrame { t: f64, max_gap: f64 },
    #[error("no channel appears in both streams")]
    NoCommonChannel,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Anomaly(#[from] AnomalyError),
}

/// How often the registration transform is recomputed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentGranularity {
    #[default]
    PerFrame,
    /// One rotation from the first frame pair, reused for every frame.
    FirstFrame,
}

impl std::str::FromStr for AlignmentGranularity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-frame" => Ok(Self::PerFrame),
            "first-frame" => Ok(Self::FirstFrame),
            other => Err(format!("unknown alignment granularity `{other}`")),
        }
    }
}

fn nearest_frame(frames: &[SkeletonFrame], t: f64) -> &SkeletonFrame {
    let i = frames.partition_point(|f| f.t < t);
    match (i.checked_sub(1), frames.get(i)) {
        (Some(p), Some(n)) if t - frames[p].t <= n.t - t => &frames[p],
        (_, Some(n)) => n,
        (Some(p), None) => &frames[p],
        (None, None) => unreachable!("frames is non-empty"),
    }
}

fn normalized(frame: &SkeletonFrame) -> Result<(SkeletonFrame, RigidTransform), PipelineError> {
    normalize(frame).map_err(|source| PipelineError::Registration { t: frame.t, source })
}

/// Brings `estimated` into the normalized frame of `reference`.
///
/// Both sequences must share one topology (map first if needed). Each
/// estimated frame is paired with the reference frame nearest in time, which
/// must lie within `max_gap` seconds.
pub fn register_sequence(
    estimated: &MotionSequence,
    reference: &MotionSequence,
    granularity: AlignmentGranularity,
    max_gap: f64,
) -> Result<MotionSequence, PipelineError> {
    let (et, rt) = (estimated.topology(), reference.topology());
    if et.name() != rt.name() || et.joints() != rt.joints() {
        return Err(PipelineError::TopologyMismatch(
            et.name().to_string(),
            rt.name().to_string(),
        ));
    }
    if reference.is_empty() {
        return Err(PipelineError::EmptySequence("reference"));
    }
    let mut fixed: Option<RigidTransform> = None;
    let mut frames = Vec::with_capacity(estimated.len());
    for frame in estimated.frames() {
        let (norm, _) = normalized(frame)?;
        let transform = match (granularity, fixed) {
            (AlignmentGranularity::FirstFrame, Some(t)) => t,
            _ => {
                let target = nearest_frame(reference.frames(), frame.t);
                if (target.t - frame.t).abs() > max_gap {
                    return Err(PipelineError::NoReferenceFrame {
                        t: frame.t,
                        max_gap,
                    });
                }
                let (target, _) = normalized(target)?;
                let t = rigid_align(&norm.anchor_points(et), &target.anchor_points(rt), false)
                    .map_err(|source| PipelineError::Registration { t: frame.t, source })?
                    .transform;
                fixed = Some(t);
                t
            }
        };
        frames.push(apply_transform(&norm, &transform));
    }
    Ok(estimated.with_frames(frames)?)
}

/// Angle series for every spec, gaps where a segment degenerates.
pub fn compute_angles(
    seq: &MotionSequence,
    specs: &[JointAngleSpec],
    source: SeriesSource,
) -> Result<Vec<FlexionSeries>, PipelineError> {
    Ok(flexion_series(seq, specs, source)?
        .into_iter()
        .map(|c| c.series)
        .collect())
}

/// Collapses `<ch>_x`, `<ch>_y`, `<ch>_z` column triples into one channel
/// `<ch>` carrying the `component` angle, optionally after branch repair.
///
/// Columns that are not part of a complete triple pass through unchanged.
/// Only rows where all three components are present are kept. Returns the
/// channels and the total number of repaired samples.
pub fn collapse_euler_channels(
    columns: Vec<FlexionSeries>,
    convention: &RotationConvention,
    component: Axis,
    repair: bool,
) -> Result<(Vec<FlexionSeries>, usize), PipelineError> {
    let suffix = |c: &str| -> Option<(String, usize)> {
        let (stem, axis) = c.rsplit_once('_')?;
        let i = ["x", "y", "z"].iter().position(|s| *s == axis)?;
        Some((stem.to_string(), i))
    };
    let mut triples: BTreeMap<String, [Option<usize>; 3]> = BTreeMap::new();
    for (idx, col) in columns.iter().enumerate() {
        if let Some((stem, i)) = suffix(&col.channel) {
            triples.entry(stem).or_default()[i] = Some(idx);
        }
    }
    let triples: BTreeMap<String, [usize; 3]> = triples
        .into_iter()
        .filter_map(|(stem, ix)| Some((stem, [ix[0]?, ix[1]?, ix[2]?])))
        .collect();

    let mut consumed = vec![false; columns.len()];
    let mut collapsed: BTreeMap<usize, FlexionSeries> = BTreeMap::new();
    let mut repairs = 0;
    for (stem, ix) in &triples {
        ix.iter().for_each(|&i| consumed[i] = true);
        let lookup: Vec<BTreeMap<u64, f64>> = ix
            .iter()
            .map(|&i| {
                columns[i]
                    .samples
                    .iter()
                    .map(|&(t, v)| (t.to_bits(), v))
                    .collect()
            })
            .collect();
        let samples: Vec<(f64, EulerAngles)> = columns[ix[0]]
            .samples
            .iter()
            .filter_map(|&(t, x)| {
                let y = lookup[1].get(&t.to_bits())?;
                let z = lookup[2].get(&t.to_bits())?;
                Some((t, EulerAngles::new(x, *y, *z)))
            })
            .collect();
        let mut series = EulerSeries::new(samples, *convention)?;
        if repair && !series.is_empty() {
            let (fixed, n) = canonicalize(&series);
            series = fixed;
            repairs += n;
        }
        let first = *ix.iter().min().expect("three indices");
        collapsed.insert(
            first,
            FlexionSeries::new(
                stem.clone(),
                series
                    .samples
                    .iter()
                    .map(|(t, e)| (*t, e.get(component)))
                    .collect(),
                columns[first].source,
            )?,
        );
    }

    let mut out = Vec::with_capacity(columns.len());
    for (idx, col) in columns.into_iter().enumerate() {
        if let Some(c) = collapsed.remove(&idx) {
            out.push(c);
        } else if !consumed[idx] {
            out.push(col);
        }
    }
    Ok((out, repairs))
}

/// Deviations of every channel present in both `reference` and `candidate`.
pub fn recording_deviations(
    meta: &RecordingMeta,
    reference: &[FlexionSeries],
    candidate: &[FlexionSeries],
    max_gap: f64,
    method: PairingMethod,
) -> Result<Vec<RecordingDeviations>, PipelineError> {
    let mut out = Vec::new();
    for r in reference {
        let Some(c) = candidate.iter().find(|c| c.channel == r.channel) else {
            continue;
        };
        if r.is_empty() || c.is_empty() {
            continue;
        }
        // The reference is the interpolation target: candidate timestamps drive pairing.
        let paired = pair_streams(c, r, max_gap, method)?;
        out.push(RecordingDeviations {
            meta: meta.clone(),
            channel: r.channel.clone(),
            deviations: deviation_series(&paired)
                .into_iter()
                .map(|(_, d)| d)
                .collect(),
            gaps: paired.gaps,
        });
    }
    if out.is_empty() {
        return Err(PipelineError::NoCommonChannel);
    }
    Ok(out)
}

/// Everything needed to compare one recording.
#[derive(Debug, Clone)]
pub struct RecordingPair {
    pub meta: RecordingMeta,
    pub reference: Vec<FlexionSeries>,
    pub candidate: Vec<FlexionSeries>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub mode: ComparisonMode,
    pub group_by: GroupBy,
    pub max_gap: f64,
    pub method: PairingMethod,
    pub convention: RotationConvention,
    pub flexion_component: Axis,
    pub canonicalize_reference: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            mode: ComparisonMode::CrossSystem,
            group_by: GroupBy::exercise_only(),
            max_gap: crate::sync::DEFAULT_MAX_GAP,
            method: PairingMethod::Linear,
            convention: RotationConvention::default(),
            flexion_component: Axis::Z,
            canonicalize_reference: false,
        }
    }
}

/// Pooled report over all recordings, with per-recording deviation series
/// kept for plotting.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: DeviationReport,
    pub repaired_samples: usize,
    pub deviations: Vec<(String, Vec<(f64, f64)>)>,
}

pub fn compare(
    pairs: Vec<RecordingPair>,
    opts: &CompareOptions,
) -> Result<Comparison, PipelineError> {
    let mut recordings = Vec::new();
    let mut traces = Vec::new();
    let mut repaired_samples = 0;
    for pair in pairs {
        let (reference, n) = collapse_euler_channels(
            pair.reference,
            &opts.convention,
            opts.flexion_component,
            opts.canonicalize_reference,
        )?;
        repaired_samples += n;
        for r in &reference {
            if let Some(c) = pair.candidate.iter().find(|c| c.channel == r.channel) {
                if !r.is_empty() && !c.is_empty() {
                    let paired = pair_streams(c, r, opts.max_gap, opts.method)?;
                    traces.push((
                        format!("{} {}", pair.meta.subject, r.channel),
                        deviation_series(&paired),
                    ));
                }
            }
        }
        recordings.extend(recording_deviations(
            &pair.meta,
            &reference,
            &pair.candidate,
            opts.max_gap,
            opts.method,
        )?);
    }
    let mut report = group_report(&recordings, &opts.group_by, opts.mode)?;
    report.reference_repaired = opts.canonicalize_reference;
    Ok(Comparison {
        report,
        repaired_samples,
        deviations: traces,
    })
}

//! Temporal pairing of angle series and pooled deviation statistics.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{channel_rank, FlexionSeries};
use crate::skeleton::{Exercise, RecordingMeta};

/// Default pairing tolerance in seconds.
pub const DEFAULT_MAX_GAP: f64 = 0.1;

/// Timestamps closer than this count as identical for exact pairing.
const EXACT_TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyncError {
    #[error("series `{0}` is empty")]
    EmptySeries(String),
    #[error("time spans of `{0}` and `{1}` do not overlap")]
    NoOverlap(String, String),
    #[error("max_gap must be positive, got {0}")]
    InvalidGap(f64),
    #[error("cannot aggregate an empty deviation list")]
    EmptyInput,
    #[error("group {0} matched no samples")]
    EmptyGroup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMethod {
    Exact,
    Nearest,
    Linear,
}

impl std::str::FromStr for PairingMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "nearest" => Ok(Self::Nearest),
            "linear" | "linear-interpolated" => Ok(Self::Linear),
            other => Err(format!("unknown pairing method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub channel: String,
    /// `(t, a, b)` with `b` resampled onto the timestamps of `a`.
    pub samples: Vec<(f64, f64, f64)>,
    pub method: PairingMethod,
    /// Samples of `a` that could not be paired.
    pub gaps: usize,
}

/// Resamples `b` at the timestamps of `a`.
///
/// Samples of `a` outside `b`'s span, or farther than `max_gap` from every
/// sample of `b`, are dropped and counted as gaps.
pub fn pair_streams(
    a: &FlexionSeries,
    b: &FlexionSeries,
    max_gap: f64,
    method: PairingMethod,
) -> Result<PairedSeries, SyncError> {
    if max_gap.is_nan() || max_gap <= 0.0 {
        return Err(SyncError::InvalidGap(max_gap));
    }
    for s in [a, b] {
        if s.samples.is_empty() {
            return Err(SyncError::EmptySeries(s.channel.clone()));
        }
    }
    let (a_first, a_last) = (a.samples[0].0, a.samples[a.len() - 1].0);
    let (b_first, b_last) = (b.samples[0].0, b.samples[b.len() - 1].0);
    if a_last < b_first || b_last < a_first {
        return Err(SyncError::NoOverlap(a.channel.clone(), b.channel.clone()));
    }

    let bs = &b.samples;
    let mut samples = Vec::with_capacity(a.len());
    let mut gaps = 0;
    // index of the first b-sample with time >= t; advances monotonically
    let mut hi = 0;
    for &(t, va) in &a.samples {
        if t < b_first || t > b_last {
            gaps += 1;
            continue;
        }
        while bs[hi].0 < t {
            hi += 1;
        }
        let lo = if bs[hi].0 == t { hi } else { hi - 1 };
        let (t0, v0) = bs[lo];
        let (t1, v1) = bs[hi];
        let (nearest_t, nearest_v) = if t - t0 <= t1 - t { (t0, v0) } else { (t1, v1) };
        let dist = (t - nearest_t).abs();

        let vb = match method {
            PairingMethod::Exact => (dist <= EXACT_TIME_EPS).then_some(nearest_v),
            PairingMethod::Nearest => (dist <= max_gap).then_some(nearest_v),
            PairingMethod::Linear => (dist <= max_gap).then(|| {
                if lo == hi {
                    v0
                } else {
                    let w = (t - t0) / (t1 - t0);
                    v0 + (v1 - v0) * w
                }
            }),
        };
        match vb {
            Some(vb) => samples.push((t, va, vb)),
            None => gaps += 1,
        }
    }
    Ok(PairedSeries {
        channel: a.channel.clone(),
        samples,
        method,
        gaps,
    })
}

/// Element-wise `|a - b|`, order preserved.
pub fn deviation_series(p: &PairedSeries) -> Vec<(f64, f64)> {
    p.samples
        .iter()
        .map(|&(t, a, b)| (t, (a - b).abs()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub median: f64,
    pub average: f64,
    pub maximum: f64,
    pub samples: usize,
    pub gaps: usize,
}

/// Median (mean of the two central values for even counts), arithmetic mean
/// and maximum of `devs`. The mean sums in input order.
pub fn aggregate(devs: &[f64]) -> Result<DeviationStats, SyncError> {
    if devs.is_empty() {
        return Err(SyncError::EmptyInput);
    }
    let mut sorted = devs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let average = devs.iter().sum::<f64>() / n as f64;
    Ok(DeviationStats {
        median,
        average,
        maximum: sorted[n - 1],
        samples: n,
        gaps: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonMode {
    /// A system's native angles against angles recomputed from its own skeleton.
    SelfConsistency,
    /// Reference native angles against angles from the estimated skeleton.
    CrossSystem,
}

impl fmt::Display for ComparisonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonMode::SelfConsistency => "self-consistency",
            ComparisonMode::CrossSystem => "cross-system",
        })
    }
}

impl std::str::FromStr for ComparisonMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "self-consistency" | "self" => Ok(Self::SelfConsistency),
            "cross-system" | "cross" => Ok(Self::CrossSystem),
            other => Err(format!("unknown comparison mode `{other}`")),
        }
    }
}

/// Metadata dimension that splits report rows beyond (channel, exercise).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Perspective,
    Clothing,
    Subject,
}

impl std::str::FromStr for GroupKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perspective" => Ok(Self::Perspective),
            "clothing" => Ok(Self::Clothing),
            "subject" => Ok(Self::Subject),
            other => Err(format!("unknown group key `{other}`")),
        }
    }
}

impl GroupKey {
    fn value(self, meta: &RecordingMeta) -> String {
        match self {
            GroupKey::Perspective => format!("{}deg", meta.camera_perspective_deg),
            GroupKey::Clothing => meta.clothing.clone(),
            GroupKey::Subject => meta.subject.clone(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            GroupKey::Perspective => "perspective",
            GroupKey::Clothing => "clothing",
            GroupKey::Subject => "subject",
        }
    }
}

/// Which extra keys split the rows, and which key values must be present.
///
/// Rows are always split by channel and exercise. A `require` entry restricts
/// the report to recordings with that value (e.g. clothing = "winter jacket");
/// a required value that matches no samples is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupBy {
    pub keys: Vec<GroupKey>,
    #[serde(default)]
    pub require: Vec<(GroupKey, String)>,
}

impl GroupBy {
    pub fn exercise_only() -> Self {
        Self::default()
    }

    pub fn with_keys(keys: impl IntoIterator<Item = GroupKey>) -> Self {
        Self {
            keys: keys.into_iter().collect(),
            require: Vec::new(),
        }
    }

    pub fn require(mut self, key: GroupKey, value: impl Into<String>) -> Self {
        self.require.push((key, value.into()));
        self
    }

    fn label(&self, meta: &RecordingMeta) -> String {
        let mut label = meta.exercise.label().to_string();
        let mut keys = self.keys.clone();
        keys.sort();
        keys.dedup();
        for k in keys {
            label.push('|');
            label.push_str(&k.value(meta));
        }
        label
    }
}

/// Deviations of one channel in one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingDeviations {
    pub meta: RecordingMeta,
    pub channel: String,
    pub deviations: Vec<f64>,
    pub gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub channel: String,
    /// Exercise label, extended with `|value` for each extra group key.
    pub group: String,
    pub stats: DeviationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub mode: ComparisonMode,
    pub group_by: GroupBy,
    /// Whether the reference angles were canonicalized before comparison.
    pub reference_repaired: bool,
    pub rows: Vec<ReportRow>,
}

fn exercise_rank(group: &str) -> (usize, String) {
    let head = group.split('|').next().unwrap_or(group);
    let rank = match Exercise::parse(head) {
        Exercise::Squat => 0,
        Exercise::Situp => 1,
        Exercise::Pushup => 2,
        Exercise::Other(_) => 3,
    };
    (rank, group.to_string())
}

/// Sorts rows by canonical joint order, then exercise order.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        channel_rank(&a.channel)
            .cmp(&channel_rank(&b.channel))
            .then_with(|| exercise_rank(&a.group).cmp(&exercise_rank(&b.group)))
    });
}

/// Pools deviations per (channel, group) across recordings and aggregates each pool.
pub fn group_report(
    recordings: &[RecordingDeviations],
    group_by: &GroupBy,
    mode: ComparisonMode,
) -> Result<DeviationReport, SyncError> {
    for (key, value) in &group_by.require {
        let found = recordings
            .iter()
            .any(|r| key.value(&r.meta) == *value && !r.deviations.is_empty());
        if !found {
            return Err(SyncError::EmptyGroup(format!("{}={value}", key.name())));
        }
    }

    let mut pools: BTreeMap<(String, String), (Vec<f64>, usize)> = BTreeMap::new();
    for rec in recordings {
        let passes = group_by
            .require
            .iter()
            .all(|(k, v)| k.value(&rec.meta) == *v);
        if !passes {
            continue;
        }
        let entry = pools
            .entry((rec.channel.clone(), group_by.label(&rec.meta)))
            .or_default();
        entry.0.extend_from_slice(&rec.deviations);
        entry.1 += rec.gaps;
    }
    if pools.is_empty() {
        return Err(SyncError::EmptyGroup("(no recordings)".into()));
    }

    let mut rows = Vec::with_capacity(pools.len());
    for ((channel, group), (devs, gaps)) in pools {
        let mut stats =
            aggregate(&devs).map_err(|_| SyncError::EmptyGroup(format!("{channel}/{group}")))?;
        stats.gaps = gaps;
        rows.push(ReportRow {
            channel,
            group,
            stats,
        });
    }
    sort_rows(&mut rows);
    Ok(DeviationReport {
        mode,
        group_by: group_by.clone(),
        reference_repaired: false,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::SeriesSource;
    use proptest::prelude::*;

    fn series(name: &str, s: &[(f64, f64)]) -> FlexionSeries {
        FlexionSeries::new(name, s.to_vec(), SeriesSource::ReferenceNative).unwrap()
    }

    fn meta(ex: Exercise, clothing: &str) -> RecordingMeta {
        RecordingMeta::new("s1", ex, 0.0, clothing, 10).unwrap()
    }

    #[test]
    fn identical_grids_pair_exactly() {
        let a = series("k", &[(0.0, 1.0), (0.1, 2.0), (0.2, 3.0)]);
        let b = series("k", &[(0.0, 1.5), (0.1, 2.5), (0.2, 3.5)]);
        for m in [
            PairingMethod::Exact,
            PairingMethod::Nearest,
            PairingMethod::Linear,
        ] {
            let p = pair_streams(&a, &b, 0.1, m).unwrap();
            assert_eq!(p.gaps, 0);
            assert_eq!(
                p.samples,
                vec![(0.0, 1.0, 1.5), (0.1, 2.0, 2.5), (0.2, 3.0, 3.5)]
            );
        }
    }

    #[test]
    fn linear_midpoint() {
        let a = series("k", &[(0.5, 0.0)]);
        let b = series("k", &[(0.0, 0.0), (1.0, 10.0)]);
        let p = pair_streams(&a, &b, 1.0, PairingMethod::Linear).unwrap();
        assert_eq!(p.samples, vec![(0.5, 0.0, 5.0)]);
    }

    #[test]
    fn disjoint_spans() {
        let a = series("a", &[(0.0, 0.0), (1.0, 0.0)]);
        let b = series("b", &[(5.0, 0.0), (6.0, 0.0)]);
        assert!(matches!(
            pair_streams(&a, &b, 0.1, PairingMethod::Linear),
            Err(SyncError::NoOverlap(..))
        ));
    }

    #[test]
    fn gaps_are_counted() {
        let a = series(
            "a",
            &[
                (-1.0, 0.0),
                (0.05, 0.0),
                (0.5, 0.0),
                (0.95, 0.0),
                (3.0, 0.0),
            ],
        );
        let b = series("b", &[(0.0, 0.0), (1.0, 10.0)]);
        // 0.5 is 0.5 s from any b-sample
        let p = pair_streams(&a, &b, 0.1, PairingMethod::Linear).unwrap();
        assert_eq!(p.gaps, 3);
        assert_eq!(p.samples.len(), 2);
        let p = pair_streams(&a, &b, 0.1, PairingMethod::Nearest).unwrap();
        assert_eq!(p.samples, vec![(0.05, 0.0, 0.0), (0.95, 0.0, 10.0)]);
        let p = pair_streams(&a, &b, 0.1, PairingMethod::Exact).unwrap();
        assert_eq!(p.gaps, 5);
    }

    #[test]
    fn empty_and_bad_gap() {
        let a = series("a", &[]);
        let b = series("b", &[(0.0, 1.0)]);
        assert!(matches!(
            pair_streams(&a, &b, 0.1, PairingMethod::Linear),
            Err(SyncError::EmptySeries(_))
        ));
        assert!(matches!(
            pair_streams(&b, &b, 0.0, PairingMethod::Linear),
            Err(SyncError::InvalidGap(_))
        ));
    }

    #[test]
    fn deviations() {
        let p = PairedSeries {
            channel: "k".into(),
            samples: vec![(0.0, 10.0, 12.0), (1.0, 20.0, 17.0)],
            method: PairingMethod::Exact,
            gaps: 0,
        };
        assert_eq!(deviation_series(&p), vec![(0.0, 2.0), (1.0, 3.0)]);
    }

    #[test]
    fn aggregate_examples() {
        let s = aggregate(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((s.median, s.average, s.maximum), (3.0, 22.0, 100.0));
        let s = aggregate(&[5.0]).unwrap();
        assert_eq!(
            (s.median, s.average, s.maximum, s.samples),
            (5.0, 5.0, 5.0, 1)
        );
        let s = aggregate(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(aggregate(&[]), Err(SyncError::EmptyInput));
    }

    #[test]
    fn single_group_equals_aggregate() {
        let recs = [RecordingDeviations {
            meta: meta(Exercise::Squat, "jeans"),
            channel: "knee_right".into(),
            deviations: vec![0.3, 0.1, 0.2],
            gaps: 2,
        }];
        let r = group_report(
            &recs,
            &GroupBy::exercise_only(),
            ComparisonMode::SelfConsistency,
        )
        .unwrap();
        let mut expected = aggregate(&[0.3, 0.1, 0.2]).unwrap();
        expected.gaps = 2;
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].stats, expected);
        assert_eq!(r.rows[0].group, "squat");
    }

    #[test]
    fn pooling_example() {
        let recs = [
            RecordingDeviations {
                meta: meta(Exercise::Squat, "a"),
                channel: "knee_left".into(),
                deviations: vec![1.0, 1.0],
                gaps: 0,
            },
            RecordingDeviations {
                meta: meta(Exercise::Squat, "b"),
                channel: "knee_left".into(),
                deviations: vec![3.0],
                gaps: 1,
            },
        ];
        let r = group_report(
            &recs,
            &GroupBy::exercise_only(),
            ComparisonMode::CrossSystem,
        )
        .unwrap();
        let s = r.rows[0].stats;
        assert_eq!(s.average, 5.0 / 3.0);
        assert_eq!(s.median, 1.0);
        assert_eq!(s.maximum, 3.0);
        assert_eq!((s.samples, s.gaps), (3, 1));

        let by_clothing = GroupBy::with_keys([GroupKey::Clothing]);
        let r = group_report(&recs, &by_clothing, ComparisonMode::CrossSystem).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[1].group, "squat|b");

        let absent = GroupBy::with_keys([GroupKey::Clothing]).require(GroupKey::Clothing, "winter");
        assert!(matches!(
            group_report(&recs, &absent, ComparisonMode::CrossSystem),
            Err(SyncError::EmptyGroup(_))
        ));
        // a required value that is present filters the other recordings out
        let only_a = GroupBy::exercise_only().require(GroupKey::Clothing, "a");
        let r = group_report(&recs, &only_a, ComparisonMode::CrossSystem).unwrap();
        assert_eq!(r.rows[0].stats.samples, 2);
    }

    #[test]
    fn rows_follow_joint_order() {
        let mk = |ch: &str, ex: Exercise| RecordingDeviations {
            meta: meta(ex, "x"),
            channel: ch.into(),
            deviations: vec![1.0],
            gaps: 0,
        };
        let recs = [
            mk("elbow_left", Exercise::Squat),
            mk("custom", Exercise::Squat),
            mk("knee_left", Exercise::Pushup),
            mk("knee_left", Exercise::Squat),
            mk("knee_right", Exercise::Situp),
            mk("back_t8", Exercise::Squat),
        ];
        let r = group_report(
            &recs,
            &GroupBy::exercise_only(),
            ComparisonMode::CrossSystem,
        )
        .unwrap();
        let order: Vec<_> = r
            .rows
            .iter()
            .map(|r| format!("{}/{}", r.channel, r.group))
            .collect();
        assert_eq!(
            order,
            [
                "knee_right/situp",
                "knee_left/squat",
                "knee_left/pushup",
                "back_t8/squat",
                "elbow_left/squat",
                "custom/squat"
            ]
        );
    }

    proptest! {
        #[test]
        fn aggregate_bounds_and_permutation(mut v in prop::collection::vec(0.0..1000.0f64, 1..60), seed in any::<u64>()) {
            let s = aggregate(&v).unwrap();
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(min <= s.median && s.median <= s.maximum);
            prop_assert!(min <= s.average && s.average <= s.maximum * (1.0 + 1e-15));
            // permutation: median and maximum exact, mean up to summation order
            let n = v.len();
            let k = (seed as usize) % n;
            v.rotate_left(k);
            v.reverse();
            let p = aggregate(&v).unwrap();
            prop_assert_eq!(s.median, p.median);
            prop_assert_eq!(s.maximum, p.maximum);
            prop_assert!((s.average - p.average).abs() <= 1e-12 * s.maximum.max(1.0));
        }

        #[test]
        fn linear_pairing_reproduces_affine_b(
            slope in -50.0..50.0f64,
            icpt in -90.0..90.0f64,
            b_steps in prop::collection::vec(0.001..0.05f64, 2..40),
            a_steps in prop::collection::vec(0.001..0.05f64, 1..40),
        ) {
            let mut t = 0.0;
            let b: Vec<(f64, f64)> = b_steps.iter().map(|d| { t += d; (t, slope * t + icpt) }).collect();
            let mut t = b[0].0;
            let a: Vec<(f64, f64)> = a_steps.iter().map(|d| { t += d; (t, 0.0) }).collect();
            let p = pair_streams(&series("a", &a), &series("b", &b), 0.1, PairingMethod::Linear);
            if let Ok(p) = p {
                for (t, _, vb) in p.samples {
                    prop_assert!((vb - (slope * t + icpt)).abs() <= 1e-9);
                }
            }
        }
    }
}

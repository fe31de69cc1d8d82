#![allow(dead_code)]

use std::sync::Arc;

use mocap_xval::anomaly::EulerSeries;
use mocap_xval::io::{self, round_sig9, IoError};
use mocap_xval::kinematics::{FlexionSeries, SeriesSource, DEFAULT_CHANNEL_ORDER};
use mocap_xval::model::{Model, REFERENCE_TOPOLOGY};
use mocap_xval::pipeline::{compute_angles, register_sequence, AlignmentGranularity};
use mocap_xval::rotation::{EulerAngles, RotationConvention};
use mocap_xval::skeleton::{
    Exercise, MotionSequence, RecordingMeta, SkeletonFrame, SkeletonTopology,
};
use mocap_xval::synth::{
    forward_skeleton, generate_trajectory, perturb, random_rigid_transform, LimbLengths,
    MotionProfile, Perturbation, ProfileShape,
};
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn reference_topology() -> Arc<SkeletonTopology> {
    Model::bundled().topology(REFERENCE_TOPOLOGY).unwrap()
}

/// A random profile driving a non-empty subset of the eight channels.
pub fn random_profile(rng: &mut impl Rng) -> MotionProfile {
    let mut channels: Vec<String> = DEFAULT_CHANNEL_ORDER
        .iter()
        .filter(|_| rng.gen_bool(0.5))
        .map(|c| c.to_string())
        .collect();
    if channels.is_empty() {
        channels.push(DEFAULT_CHANNEL_ORDER.choose(rng).unwrap().to_string());
    }
    let max_amplitude = if channels.iter().any(|c| c.starts_with("ankle")) {
        90.0
    } else {
        150.0
    };
    MotionProfile {
        shape: if rng.gen_bool(0.5) {
            ProfileShape::Sinusoidal
        } else {
            ProfileShape::Trapezoid
        },
        amplitude_deg: rng.gen_range(5.0..=max_amplitude),
        period_s: rng.gen_range(0.8..2.5),
        repetitions: rng.gen_range(1..=10),
        sample_rate_hz: rng.gen_range(30.0..100.0),
        channels,
    }
}

/// Ground truth for all eight channels (undriven ones are 0).
pub fn full_truth(profile: &MotionProfile) -> Vec<FlexionSeries> {
    let driven = generate_trajectory(profile).unwrap();
    DEFAULT_CHANNEL_ORDER
        .iter()
        .map(|c| {
            driven
                .iter()
                .find(|s| s.channel == *c)
                .cloned()
                .unwrap_or_else(|| FlexionSeries {
                    channel: c.to_string(),
                    samples: driven[0].samples.iter().map(|&(t, _)| (t, 0.0)).collect(),
                    source: SeriesSource::ReferenceNative,
                })
        })
        .collect()
}

pub fn clean_sequence(truth: &[FlexionSeries]) -> MotionSequence {
    let meta = RecordingMeta::new("synthetic", Exercise::Squat, 0.0, "none", 10).unwrap();
    forward_skeleton(truth, &LimbLengths::default(), reference_topology(), meta).unwrap()
}

/// Perturb, register onto the clean sequence, and recompute angles.
pub fn recovered_angles(
    model: &Model,
    clean: &MotionSequence,
    perturbation: &Perturbation,
    seed: u64,
) -> Vec<FlexionSeries> {
    let estimated = perturb(clean, perturbation, seed).unwrap();
    let registered =
        register_sequence(&estimated, clean, AlignmentGranularity::PerFrame, 0.1).unwrap();
    compute_angles(
        &registered,
        model.channels(),
        SeriesSource::EstimatedSkeleton,
    )
    .unwrap()
}

/// Largest |recovered − truth| over all channels and samples, requiring
/// every sample to be present.
pub fn max_error(truth: &[FlexionSeries], recovered: &[FlexionSeries]) -> f64 {
    let mut worst: f64 = 0.0;
    for t in truth {
        let r = recovered.iter().find(|r| r.channel == t.channel).unwrap();
        assert_eq!(r.len(), t.len(), "channel {} lost samples", t.channel);
        for (a, b) in t.samples.iter().zip(&r.samples) {
            assert_eq!(a.0, b.0);
            worst = worst.max((a.1 - b.1).abs());
        }
    }
    worst
}

pub fn random_perturbation(rng: &mut impl Rng, noise_sigma: f64) -> Perturbation {
    Perturbation {
        transform: random_rigid_transform(rng, 3.0),
        scale: rng.gen_range(0.5..2.0),
        noise_sigma,
        dropout: 0.0,
    }
}

// ---- format fuzzing ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Skeleton,
    Angles,
    Euler,
}

pub const FORMATS: [Format; 3] = [Format::Skeleton, Format::Angles, Format::Euler];

fn value(rng: &mut impl Rng, scale: f64) -> f64 {
    round_sig9(rng.gen_range(-scale..scale))
}

fn times(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut t = round_sig9(rng.gen_range(-1.0..1.0));
    (0..n)
        .map(|_| {
            t = round_sig9(t + rng.gen_range(0.001..0.2));
            t
        })
        .collect()
}

pub fn random_sequence(rng: &mut impl Rng) -> MotionSequence {
    let topo = reference_topology();
    let n = rng.gen_range(1..5);
    let frames = times(rng, n)
        .into_iter()
        .map(|t| {
            SkeletonFrame::new(
                t,
                (0..topo.len())
                    .map(|_| Vector3::new(value(rng, 3.0), value(rng, 3.0), value(rng, 3.0)))
                    .collect(),
            )
        })
        .collect();
    let meta = RecordingMeta::new("s", Exercise::Pushup, value(rng, 90.0), "jacket", 10).unwrap();
    MotionSequence::new(topo, frames, meta).unwrap()
}

pub fn random_angles(rng: &mut impl Rng) -> Vec<FlexionSeries> {
    let count = rng.gen_range(1..8);
    let grid = times(rng, count);
    let n = rng.gen_range(1..5);
    let mut names: Vec<&str> = DEFAULT_CHANNEL_ORDER.to_vec();
    names.shuffle(rng);
    names[..n]
        .iter()
        .map(|name| {
            let mut samples = Vec::new();
            for &t in &grid {
                if rng.gen_bool(0.8) {
                    samples.push((t, value(rng, 180.0)));
                }
            }
            if samples.is_empty() {
                samples.push((grid[0], value(rng, 180.0)));
            }
            FlexionSeries::new(*name, samples, SeriesSource::ReferenceNative).unwrap()
        })
        .collect()
}

pub fn random_euler(rng: &mut impl Rng) -> EulerSeries {
    let n = rng.gen_range(1..8);
    let samples = times(rng, n)
        .into_iter()
        .map(|t| {
            (
                t,
                EulerAngles::new(value(rng, 180.0), value(rng, 90.0), value(rng, 180.0)),
            )
        })
        .collect();
    EulerSeries::new(samples, RotationConvention::default()).unwrap()
}

pub fn random_file(rng: &mut impl Rng, format: Format) -> String {
    match format {
        Format::Skeleton => io::write_skeleton_stream(&random_sequence(rng)),
        Format::Angles => io::write_angle_csv(&random_angles(rng)),
        Format::Euler => io::write_euler_csv(&random_euler(rng)),
    }
}

pub fn parse(format: Format, text: &str) -> Result<(), IoError> {
    match format {
        Format::Skeleton => io::parse_skeleton_stream(text, reference_topology()).map(drop),
        Format::Angles => io::parse_angle_csv(text, SeriesSource::ReferenceNative).map(drop),
        Format::Euler => io::parse_euler_csv(text, RotationConvention::default()).map(drop),
    }
}

/// Writes a random value, reads it back and writes again. Returns whether
/// the value and the text both survived unchanged.
pub fn round_trip(rng: &mut impl Rng, format: Format) -> bool {
    match format {
        Format::Skeleton => {
            let v = random_sequence(rng);
            let text = io::write_skeleton_stream(&v);
            let back = io::parse_skeleton_stream(&text, reference_topology()).unwrap();
            back == v && io::write_skeleton_stream(&back) == text
        }
        Format::Angles => {
            let v = random_angles(rng);
            let text = io::write_angle_csv(&v);
            let back = io::parse_angle_csv(&text, SeriesSource::ReferenceNative).unwrap();
            back == v && io::write_angle_csv(&back) == text
        }
        Format::Euler => {
            let v = random_euler(rng);
            let text = io::write_euler_csv(&v);
            let back = io::parse_euler_csv(&text, RotationConvention::default()).unwrap();
            back == v && io::write_euler_csv(&back) == text
        }
    }
}

const BAD_NUMBERS: [&str; 6] = ["abc", "NaN", "inf", "1.2.3", "--4", "0x10"];

fn replace_line(text: &str, index: usize, new: &str) -> String {
    let mut lines: Vec<&str> = text.lines().collect();
    lines[index] = new;
    lines.join("\n") + "\n"
}

fn corrupt_skeleton(rng: &mut impl Rng, text: &str) -> (String, usize) {
    let lines: Vec<&str> = text.lines().collect();
    // line 0 is the header; frames follow
    let k = rng.gen_range(1..lines.len());
    let mut frame: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(lines[k]).unwrap();
    let prev_t = (k > 1).then(|| {
        let p: serde_json::Value = serde_json::from_str(lines[k - 1]).unwrap();
        p["t"].as_f64().unwrap()
    });
    let joints = frame["joints"].as_object().unwrap().clone();
    let names: Vec<String> = joints.keys().cloned().collect();
    let name = names.choose(rng).unwrap().clone();
    let new_line = match rng.gen_range(0..6) {
        0 => {
            let bad = BAD_NUMBERS.choose(rng).unwrap();
            frame["joints"][&name][rng.gen_range(0..3)] = serde_json::json!("__BAD__");
            serde_json::to_string(&frame)
                .unwrap()
                .replace("\"__BAD__\"", bad)
        }
        1 => {
            frame["joints"].as_object_mut().unwrap().remove(&name);
            serde_json::to_string(&frame).unwrap()
        }
        2 => {
            let j = frame["joints"].as_object_mut().unwrap();
            let v = j.remove(&name).unwrap();
            j.insert(format!("{name}_typo"), v);
            serde_json::to_string(&frame).unwrap()
        }
        3 => {
            frame["joints"][&name] = serde_json::json!([1.0, 2.0]);
            serde_json::to_string(&frame).unwrap()
        }
        4 => match prev_t {
            Some(p) => {
                frame["t"] = serde_json::json!(p - rng.gen_range(0.0..1.0));
                serde_json::to_string(&frame).unwrap()
            }
            None => {
                frame["t"] = serde_json::json!("soon");
                serde_json::to_string(&frame).unwrap()
            }
        },
        _ => {
            frame.remove("t");
            serde_json::to_string(&frame).unwrap()
        }
    };
    (replace_line(text, k, &new_line), k + 1)
}

fn corrupt_csv(rng: &mut impl Rng, text: &str, gaps_allowed: bool) -> (String, usize) {
    let lines: Vec<&str> = text.lines().collect();
    let k = rng.gen_range(0..lines.len());
    let mut cells: Vec<String> = lines[k].split(',').map(str::to_string).collect();
    if k == 0 {
        let i = rng.gen_range(0..cells.len());
        cells[i] = match (i, rng.gen_range(0..2)) {
            (0, _) => "time".into(),
            (_, 0) => String::new(),
            _ => cells[if i == 1 { 0 } else { 1 }].clone(),
        };
        return (replace_line(text, 0, &cells.join(",")), 1);
    }
    let filled: Vec<usize> = (0..cells.len()).filter(|&i| !cells[i].is_empty()).collect();
    match rng.gen_range(0..4) {
        0 => {
            let i = *filled.choose(rng).unwrap();
            cells[i] = BAD_NUMBERS.choose(rng).unwrap().to_string();
        }
        1 => {
            cells.remove(rng.gen_range(0..cells.len()));
        }
        2 => cells.push("1".into()),
        _ => {
            if k >= 2 {
                let prev: f64 = lines[k - 1].split(',').next().unwrap().parse().unwrap();
                cells[0] = (prev - rng.gen_range(0.0..1.0)).to_string();
            } else if !gaps_allowed {
                let i = rng.gen_range(0..cells.len());
                cells[i] = String::new();
            } else {
                cells[0] = String::new();
            }
        }
    }
    (replace_line(text, k, &cells.join(",")), k + 1)
}

/// A single-field corruption of a valid file and the line it sits on.
pub fn corrupt(rng: &mut impl Rng, format: Format, text: &str) -> (String, usize) {
    match format {
        Format::Skeleton => corrupt_skeleton(rng, text),
        Format::Angles => corrupt_csv(rng, text, true),
        Format::Euler => corrupt_csv(rng, text, false),
    }
}

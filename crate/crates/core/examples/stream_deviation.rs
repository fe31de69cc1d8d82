//! Pair two angle streams on different clocks and pool the deviations.

use mocap_xval::kinematics::{FlexionSeries, SeriesSource};
use mocap_xval::skeleton::{Exercise, RecordingMeta};
use mocap_xval::sync::{
    aggregate, deviation_series, group_report, pair_streams, ComparisonMode, GroupBy, GroupKey,
    PairingMethod, RecordingDeviations,
};

fn sine(channel: &str, rate: f64, offset: f64, phase: f64) -> FlexionSeries {
    let samples = (0..(4.0 * rate) as usize)
        .map(|k| {
            let t = k as f64 / rate;
            (
                t,
                offset + 45.0 * (1.0 - (std::f64::consts::TAU * (t - phase) / 2.0).cos()),
            )
        })
        .collect();
    FlexionSeries::new(channel, samples, SeriesSource::ReferenceNative).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // reference at 60 Hz, camera at 25 Hz with a small bias and lag
    let reference = sine("knee_right", 60.0, 0.0, 0.0);
    let camera = sine("knee_right", 25.0, 1.5, 0.01);

    let paired = pair_streams(&camera, &reference, 0.1, PairingMethod::Linear)?;
    let devs: Vec<f64> = deviation_series(&paired)
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let stats = aggregate(&devs)?;
    println!(
        "{} pairs, {} gaps: median {:.2}°, average {:.2}°, maximum {:.2}°",
        stats.samples, paired.gaps, stats.median, stats.average, stats.maximum
    );

    let rec = |subject: &str, perspective: f64, devs: Vec<f64>| RecordingDeviations {
        meta: RecordingMeta::new(subject, Exercise::Squat, perspective, "sportswear", 10).unwrap(),
        channel: "knee_right".into(),
        deviations: devs,
        gaps: 0,
    };
    let recordings = [
        rec("s1", 0.0, devs.clone()),
        rec("s2", 0.0, vec![1.0, 1.0]),
        rec("s2", 45.0, vec![3.0]),
    ];
    for group_by in [
        GroupBy::exercise_only(),
        GroupBy::with_keys([GroupKey::Perspective]),
    ] {
        let report = group_report(&recordings, &group_by, ComparisonMode::CrossSystem)?;
        for row in &report.rows {
            println!(
                "{:<12} {:<14} median {:.2} average {:.2} maximum {:.2} (n={})",
                row.channel,
                row.group,
                row.stats.median,
                row.stats.average,
                row.stats.maximum,
                row.stats.samples
            );
        }
    }
    Ok(())
}

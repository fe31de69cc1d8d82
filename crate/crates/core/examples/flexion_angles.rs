//! Knee, ankle, back and elbow flexion from a posed skeleton.

use mocap_xval::kinematics::{flexion_series, hinge_flexion, SeriesSource};
use mocap_xval::model::{Model, REFERENCE_TOPOLOGY};
use mocap_xval::rotation::Axis;
use mocap_xval::skeleton::RecordingMeta;
use mocap_xval::synth::{forward_skeleton, generate_trajectory, LimbLengths, MotionProfile};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a single hinge: thigh pointing forward-down, shank straight down
    let thigh = Vector3::new(1.0, 0.0, -2.0);
    let shank = Vector3::new(0.0, 0.0, -1.0);
    println!(
        "hinge: {:.3}°",
        hinge_flexion(&thigh, &shank, Axis::Y, 0.0)?
    );

    let model = Model::bundled();
    let profile = MotionProfile {
        channels: vec![
            "knee_right".into(),
            "ankle_right".into(),
            "back_pelvis".into(),
        ],
        repetitions: 1,
        sample_rate_hz: 8.0,
        ..MotionProfile::squat(60.0)
    };
    let truth = generate_trajectory(&profile)?;
    let seq = forward_skeleton(
        &truth,
        &LimbLengths::default(),
        model.topology(REFERENCE_TOPOLOGY)?,
        RecordingMeta::default(),
    )?;
    let channels = flexion_series(&seq, model.channels(), SeriesSource::ReferenceSkeleton)?;

    print!("{:>6}", "t [s]");
    for c in &channels {
        print!(" {:>12}", c.series.channel);
    }
    println!();
    for k in 0..seq.len() {
        print!("{:6.3}", seq.frames()[k].t);
        for c in &channels {
            print!(" {:12.2}", c.series.samples[k].1);
        }
        println!();
    }
    Ok(())
}

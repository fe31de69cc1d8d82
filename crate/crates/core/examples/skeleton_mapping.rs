//! Map a 17-joint pose-estimator skeleton onto the reference segment layout.

use mocap_xval::model::{Model, POSE17_TOPOLOGY, REFERENCE_TOPOLOGY};
use mocap_xval::skeleton::{map_topology, SkeletonFrame};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = Model::bundled();
    let pose17 = model.topology(POSE17_TOPOLOGY)?;
    let segments = model.topology(REFERENCE_TOPOLOGY)?;

    // a standing pose, meters, Z up
    let named = [
        ("pelvis", [0.0, 0.0, 1.0]),
        ("right_hip", [0.0, -0.1, 1.0]),
        ("right_knee", [0.0, -0.1, 0.55]),
        ("right_ankle", [0.0, -0.1, 0.1]),
        ("right_toe", [0.18, -0.1, 0.05]),
        ("left_hip", [0.0, 0.1, 1.0]),
        ("left_knee", [0.0, 0.1, 0.55]),
        ("left_ankle", [0.0, 0.1, 0.1]),
        ("left_toe", [0.18, 0.1, 0.05]),
        ("spine", [0.0, 0.0, 1.2]),
        ("thorax", [0.0, 0.0, 1.45]),
        ("neck", [0.0, 0.0, 1.55]),
        ("head", [0.0, 0.0, 1.7]),
        ("left_shoulder", [0.0, 0.18, 1.45]),
        ("left_elbow", [0.0, 0.18, 1.15]),
        ("left_wrist", [0.1, 0.18, 0.9]),
        ("right_shoulder", [0.0, -0.18, 1.45]),
        ("right_elbow", [0.0, -0.18, 1.15]),
        ("right_wrist", [0.1, -0.18, 0.9]),
    ];
    let frame = SkeletonFrame::from_named(
        &pose17,
        0.0,
        named.iter().map(|(n, p)| (*n, Vector3::from(*p))),
    )?;

    let map = model.map(POSE17_TOPOLOGY, REFERENCE_TOPOLOGY)?;
    let mapped = map_topology(&frame, &pose17, map, &segments)?;
    for (joint, p) in segments.joints().iter().zip(&mapped.positions) {
        println!(
            "{:>11}  {:7.3} {:7.3} {:7.3}",
            joint.as_str(),
            p.x,
            p.y,
            p.z
        );
    }
    Ok(())
}

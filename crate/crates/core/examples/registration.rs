//! Normalize two views of the same skeleton and overlay them on their
//! shoulder and hip anchors.

use mocap_xval::registration::{apply_transform, normalize, rigid_align, RigidTransform};
use mocap_xval::rotation::{axis_rotation, Axis};
use mocap_xval::skeleton::SkeletonFrame;
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // left shoulder, right shoulder, left hip, right hip, plus a knee
    let body: Vec<Vector3<f64>> = [
        [0.0, 0.18, 1.45],
        [0.0, -0.18, 1.45],
        [0.0, 0.1, 1.0],
        [0.0, -0.1, 1.0],
        [0.2, 0.1, 0.6],
    ]
    .iter()
    .map(|p| Vector3::from(*p))
    .collect();
    let reference = SkeletonFrame::new(0.0, body);

    // the same body seen by a camera: rotated, shifted, in millimeters
    let camera = RigidTransform::new(
        axis_rotation(Axis::Z, 0.7) * axis_rotation(Axis::X, -0.3),
        Vector3::new(250.0, -40.0, 1800.0),
        1000.0,
    )?;
    let seen = apply_transform(&reference, &camera);

    let (ref_n, _) = normalize(&reference)?;
    let (seen_n, _) = normalize(&seen)?;
    let anchors =
        |f: &SkeletonFrame| -> [Vector3<f64>; 4] { std::array::from_fn(|i| f.positions[i]) };
    let fit = rigid_align(&anchors(&seen_n), &anchors(&ref_n), false)?;
    let overlaid = apply_transform(&seen_n, &fit.transform);

    println!("anchor residual: {:.3e}", fit.residual);
    for (a, b) in ref_n.positions.iter().zip(&overlaid.positions) {
        println!(
            "reference {:8.4?}  registered {:8.4?}",
            a.as_slice(),
            b.as_slice()
        );
    }
    Ok(())
}

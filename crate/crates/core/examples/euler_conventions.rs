//! One rotation under every Tait-Bryan convention, and behaviour at gimbal lock.

use mocap_xval::rotation::{euler_to_rotation, rotation_to_euler, EulerAngles, RotationConvention};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let zxy: RotationConvention = "intrinsic-ZXY".parse()?;
    let r = euler_to_rotation(&EulerAngles::new(30.0, 40.0, 50.0), &zxy);

    for conv in RotationConvention::all() {
        let d = rotation_to_euler(&r, &conv)?;
        let a = d.angles;
        println!("{conv:>14}: x {:8.3}  y {:8.3}  z {:8.3}", a.x, a.y, a.z);
    }

    // middle axis at 90°: only the sum of the outer angles is defined
    let locked = euler_to_rotation(&EulerAngles::new(90.0, 20.0, 15.0), &zxy);
    let d = rotation_to_euler(&locked, &zxy)?;
    println!(
        "locked input (90, 20, 15) -> ({:.3}, {:.3}, {:.3}), gimbal_locked = {}",
        d.angles.x, d.angles.y, d.angles.z, d.gimbal_locked
    );
    let alt = d.angles.alternate(&zxy);
    println!(
        "alternate branch ({:.3}, {:.3}, {:.3})",
        alt.x, alt.y, alt.z
    );
    Ok(())
}

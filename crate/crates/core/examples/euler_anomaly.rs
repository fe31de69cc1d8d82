//! Detect a 180° Euler branch flip and repair it.

use mocap_xval::anomaly::{canonicalize, detect_flips, EulerSeries, FlipThresholds};
use mocap_xval::rotation::{EulerAngles, RotationConvention};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = [
        (67.41, 0.0, -80.14),
        (78.76, 0.0, -80.76),
        (88.37, -180.0, 99.41),
        (76.19, 180.0, 100.01),
        (67.74, -180.0, 100.70),
        (61.37, 180.0, 101.43),
        (56.43, -180.0, 102.16),
        (52.25, -180.0, 102.90),
    ];
    let series = EulerSeries::new(
        rows.iter()
            .enumerate()
            .map(|(i, &(x, y, z))| (i as f64 * 0.015, EulerAngles::new(x, y, z)))
            .collect(),
        RotationConvention::default(),
    )?;

    for e in detect_flips(&series, FlipThresholds::default())? {
        println!(
            "transition {}->{}: jumps {:.2?}, rotation {:.2}°, {:?}",
            e.from_index + 1,
            e.from_index + 2,
            e.jump_deg,
            e.geodesic_deg,
            e.kind
        );
    }

    let (fixed, repaired) = canonicalize(&series);
    println!("{repaired} samples rewritten");
    for ((t, a), (_, b)) in series.samples.iter().zip(&fixed.samples) {
        println!(
            "{t:.3}  raw ({:7.2}, {:7.2}, {:7.2})  continuous ({:7.2}, {:7.2}, {:7.2})",
            a.x, a.y, a.z, b.x, b.y, b.z
        );
    }
    Ok(())
}

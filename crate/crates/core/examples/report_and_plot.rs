//! Write a deviation report as CSV and as a text table, plus an SVG plot.

use mocap_xval::io::{emit_plot, emit_report, ReportFormat};
use mocap_xval::sync::{ComparisonMode, DeviationReport, DeviationStats, GroupBy, ReportRow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let row = |channel: &str, median, average, maximum| ReportRow {
        channel: channel.into(),
        group: "squat".into(),
        stats: DeviationStats {
            median,
            average,
            maximum,
            samples: 6000,
            gaps: 0,
        },
    };
    let report = DeviationReport {
        mode: ComparisonMode::SelfConsistency,
        group_by: GroupBy::exercise_only(),
        reference_repaired: true,
        rows: vec![
            row("knee_right", 0.11, 0.11, 0.30),
            row("back_pelvis", 0.42, 0.57, 2.31),
        ],
    };
    print!("{}", emit_report(&report, ReportFormat::Csv)?);
    println!();
    print!("{}", emit_report(&report, ReportFormat::Text)?);

    let trace = |f: fn(f64) -> f64| {
        (0..200)
            .map(|k| k as f64 * 0.05)
            .map(|t| (t, f(t)))
            .collect()
    };
    let series = vec![
        (
            "knee_right".to_string(),
            trace(|t| 0.2 + 0.1 * (t * 2.0).sin().abs()),
        ),
        (
            "back_pelvis".to_string(),
            trace(|t| 0.5 + 0.4 * (t * 0.7).cos().abs()),
        ),
    ];
    let path = std::env::temp_dir().join("deviation.svg");
    emit_plot(&series, &path)?;
    println!("\nplot written to {}", path.display());
    Ok(())
}

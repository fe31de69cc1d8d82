//! File formats, report and plot emitters, and the analysis config.
//!
//! | file | layout |
//! |------|--------|
//! | skeleton stream | one JSON object per line: `{"t": s, "joints": {"name": [x, y, z]}}`, optional header line `{"topology": "...", "meta": {...}}` |
//! | angle stream | CSV, header `time_s,<channel>,...`, degrees, empty cell = gap |
//! | Euler stream | CSV, header `time_s,x_deg,y_deg,z_deg` |
//! | report | CSV `joint,exercise,median_deg,average_deg,maximum_deg,samples,gaps` or a text table |
//! | plot | SVG |
//!
//! Numbers are written rounded to 9 significant digits in their shortest
//! round-trip form, so reading what was written is exact for such values.

mod angles;
mod config;
mod plot;
mod report;
mod skeleton_stream;

pub use angles::{
    parse_angle_csv, parse_euler_csv, read_angle_stream, read_euler_stream, write_angle_csv,
    write_euler_csv, write_events_csv,
};
pub use config::AnalysisConfig;
pub use plot::{emit_plot, render_plot};
pub use report::{emit_report, parse_report_csv, ReportFormat};
pub use skeleton_stream::{
    parse_skeleton_stream, read_skeleton_stream, stream_header, write_skeleton_stream, StreamHeader,
};

use std::path::Path;

use thiserror::Error;

use crate::skeleton::SkeletonError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: timestamp {next} does not follow {prev}")]
    TimestampOrder { line: usize, prev: f64, next: f64 },
    #[error("line {line}: joint `{joint}` missing")]
    MissingJoint { line: usize, joint: String },
    #[error("file has no data")]
    EmptyFile,
    #[error("report has no rows")]
    EmptyReport,
    #[error("nothing to plot")]
    EmptySeries,
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

impl IoError {
    /// 1-based line the error points at, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            IoError::Parse { line, .. }
            | IoError::TimestampOrder { line, .. }
            | IoError::MissingJoint { line, .. } => Some(*line),
            _ => None,
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        IoError::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest text that reads back as `round_sig9(x)`.
pub fn fmt_sig9(x: f64) -> String {
    let r = round_sig9(x);
    // {:e} keeps huge and tiny magnitudes short; plain form reads better otherwise
    if r != 0.0 && !(1e-5..1e15).contains(&r.abs()) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Parses a finite number, rejecting NaN and infinities.
pub(crate) fn parse_finite(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

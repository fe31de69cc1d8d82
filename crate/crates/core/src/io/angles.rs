use std::path::Path;

use super::{fmt_sig9, parse_finite, read_file, IoError};
use crate::anomaly::{AnomalyEvent, AnomalyKind, EulerSeries};
use crate::kinematics::{FlexionSeries, SeriesSource};
use crate::rotation::{EulerAngles, RotationConvention};

const TIME_COLUMN: &str = "time_s";
const EULER_HEADER: [&str; 4] = [TIME_COLUMN, "x_deg", "y_deg", "z_deg"];

/// Rows of a CSV file with their 1-based line numbers.
fn records(text: &str) -> Result<Vec<(usize, Vec<String>)>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            IoError::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn check_header(line: usize, header: &[String]) -> Result<(), IoError> {
    if header.first().map(|h| h.trim()) != Some(TIME_COLUMN) {
        return Err(IoError::parse(
            line,
            format!("header must start with `{TIME_COLUMN}`"),
        ));
    }
    for (i, name) in header.iter().enumerate().skip(1) {
        if name.trim().is_empty() {
            return Err(IoError::parse(
                line,
                format!("column {} has no name", i + 1),
            ));
        }
        if header[..i].contains(name) {
            return Err(IoError::parse(line, format!("duplicate column `{name}`")));
        }
    }
    Ok(())
}

fn row_time(line: usize, row: &[String], prev: Option<f64>) -> Result<f64, IoError> {
    let t = parse_finite(&row[0])
        .ok_or_else(|| IoError::parse(line, format!("bad time `{}`", row[0])))?;
    if let Some(prev) = prev {
        if t <= prev {
            return Err(IoError::TimestampOrder {
                line,
                prev,
                next: t,
            });
        }
    }
    Ok(t)
}

/// One series per non-time column; empty cells are gaps.
pub fn parse_angle_csv(text: &str, source: SeriesSource) -> Result<Vec<FlexionSeries>, IoError> {
    let rows = records(text)?;
    let Some(((hline, header), body)) = rows.split_first() else {
        return Err(IoError::EmptyFile);
    };
    check_header(*hline, header)?;
    if body.is_empty() {
        return Err(IoError::EmptyFile);
    }
    let mut columns: Vec<Vec<(f64, f64)>> = vec![Vec::new(); header.len() - 1];
    let mut prev = None;
    for (line, row) in body {
        if row.len() != header.len() {
            return Err(IoError::parse(
                *line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let t = row_time(*line, row, prev)?;
        prev = Some(t);
        for (col, cell) in columns.iter_mut().zip(&row[1..]) {
            if cell.trim().is_empty() {
                continue;
            }
            let v = parse_finite(cell)
                .ok_or_else(|| IoError::parse(*line, format!("bad angle `{cell}`")))?;
            col.push((t, v));
        }
    }
    Ok(header[1..]
        .iter()
        .zip(columns)
        .map(|(name, samples)| FlexionSeries {
            channel: name.trim().to_string(),
            samples,
            source,
        })
        .collect())
}

pub fn read_angle_stream(path: &Path, source: SeriesSource) -> Result<Vec<FlexionSeries>, IoError> {
    parse_angle_csv(&read_file(path)?, source)
}

fn csv_line(cells: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(cells.into_iter().collect::<Vec<_>>())
        .expect("writing to memory");
    w.into_inner().expect("flushing to memory")
}

/// All series on the union of their timestamps; a missing sample is an empty cell.
pub fn write_angle_csv(series: &[FlexionSeries]) -> String {
    let mut times: Vec<f64> = series.iter().flat_map(|s| s.times()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut out = csv_line(
        std::iter::once(TIME_COLUMN.to_string()).chain(series.iter().map(|s| s.channel.clone())),
    );
    let mut cursor = vec![0usize; series.len()];
    for t in times {
        let cells = series
            .iter()
            .zip(cursor.iter_mut())
            .map(|(s, k)| match s.samples.get(*k) {
                Some(&(st, v)) if st == t => {
                    *k += 1;
                    fmt_sig9(v)
                }
                _ => String::new(),
            });
        out.extend(csv_line(std::iter::once(fmt_sig9(t)).chain(cells)));
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

pub fn parse_euler_csv(text: &str, convention: RotationConvention) -> Result<EulerSeries, IoError> {
    let rows = records(text)?;
    let Some(((hline, header), body)) = rows.split_first() else {
        return Err(IoError::EmptyFile);
    };
    if header.iter().map(|h| h.trim()).ne(EULER_HEADER) {
        return Err(IoError::parse(
            *hline,
            format!("header must be `{}`", EULER_HEADER.join(",")),
        ));
    }
    if body.is_empty() {
        return Err(IoError::EmptyFile);
    }
    let mut samples = Vec::with_capacity(body.len());
    let mut prev = None;
    for (line, row) in body {
        if row.len() != 4 {
            return Err(IoError::parse(
                *line,
                format!("expected 4 fields, found {}", row.len()),
            ));
        }
        let t = row_time(*line, row, prev)?;
        prev = Some(t);
        let mut a = [0.0; 3];
        for (v, cell) in a.iter_mut().zip(&row[1..]) {
            *v = parse_finite(cell)
                .ok_or_else(|| IoError::parse(*line, format!("bad angle `{cell}`")))?;
        }
        samples.push((t, EulerAngles::from_array(a)));
    }
    Ok(EulerSeries {
        samples,
        convention,
    })
}

pub fn read_euler_stream(
    path: &Path,
    convention: RotationConvention,
) -> Result<EulerSeries, IoError> {
    parse_euler_csv(&read_file(path)?, convention)
}

pub fn write_euler_csv(series: &EulerSeries) -> String {
    let mut out = csv_line(EULER_HEADER.map(String::from));
    for (t, e) in &series.samples {
        out.extend(csv_line(
            std::iter::once(*t).chain(e.as_array()).map(fmt_sig9),
        ));
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

pub fn write_events_csv(events: &[AnomalyEvent]) -> String {
    let mut out = csv_line(
        [
            "from_index",
            "t_from",
            "t_to",
            "jump_x_deg",
            "jump_y_deg",
            "jump_z_deg",
            "geodesic_deg",
            "kind",
            "x_at_transition_deg",
        ]
        .map(String::from),
    );
    for e in events {
        let kind = match e.kind {
            AnomalyKind::RepresentationFlip => "representation-flip",
            AnomalyKind::GenuineDiscontinuity => "genuine-discontinuity",
        };
        out.extend(csv_line([
            e.from_index.to_string(),
            fmt_sig9(e.t_from),
            fmt_sig9(e.t_to),
            format!("{:.2}", e.jump_deg[0]),
            format!("{:.2}", e.jump_deg[1]),
            format!("{:.2}", e.jump_deg[2]),
            format!("{:.2}", e.geodesic_deg),
            kind.to_string(),
            format!("{:.2}", e.x_at_transition),
        ]));
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

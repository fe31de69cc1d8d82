use super::{parse_finite, IoError};
use crate::sync::{DeviationReport, DeviationStats, ReportRow};

const CSV_HEADER: [&str; 7] = [
    "joint",
    "exercise",
    "median_deg",
    "average_deg",
    "maximum_deg",
    "samples",
    "gaps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "text" | "table" | "text-table" => Ok(Self::Text),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

fn cells(row: &ReportRow) -> [String; 7] {
    let s = &row.stats;
    [
        row.channel.clone(),
        row.group.clone(),
        format!("{:.2}", s.median),
        format!("{:.2}", s.average),
        format!("{:.2}", s.maximum),
        s.samples.to_string(),
        s.gaps.to_string(),
    ]
}

fn grouping(report: &DeviationReport) -> String {
    let mut parts = vec!["exercise".to_string()];
    parts.extend(
        report
            .group_by
            .keys
            .iter()
            .map(|k| format!("{k:?}").to_lowercase()),
    );
    parts.join("+")
}

/// Two-decimal report in the requested format, rows in report order.
pub fn emit_report(report: &DeviationReport, format: ReportFormat) -> Result<String, IoError> {
    if report.rows.is_empty() {
        return Err(IoError::EmptyReport);
    }
    Ok(match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("writing to memory");
            for row in &report.rows {
                w.write_record(cells(row)).expect("writing to memory");
            }
            String::from_utf8(w.into_inner().expect("flushing to memory")).expect("utf-8")
        }
        ReportFormat::Text => {
            let titles = [
                "joint",
                "exercise",
                "median [°]",
                "average [°]",
                "maximum [°]",
                "samples",
                "gaps",
            ];
            let body: Vec<[String; 7]> = report.rows.iter().map(cells).collect();
            let mut widths = titles.map(|t| t.chars().count());
            for row in &body {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cols: &[String]| {
                let padded: Vec<String> = cols
                    .iter()
                    .zip(widths)
                    .enumerate()
                    .map(|(i, (c, w))| {
                        let pad = " ".repeat(w - c.chars().count());
                        if i < 2 {
                            format!("{c}{pad}")
                        } else {
                            format!("{pad}{c}")
                        }
                    })
                    .collect();
                padded.join("  ").trim_end().to_string() + "\n"
            };
            let mut out = format!(
                "mode: {}, reference angles: {}, grouped by: {}\n",
                report.mode,
                if report.reference_repaired {
                    "repaired"
                } else {
                    "raw"
                },
                grouping(report)
            );
            out += &line(&titles.map(String::from));
            for row in &body {
                out += &line(row);
            }
            out
        }
    })
}

/// Reads rows back from [`emit_report`] CSV output.
pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            IoError::parse(e.position().map_or(0, |p| p.line() as usize), e.to_string())
        })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if k == 0 {
            if rec.iter().ne(CSV_HEADER) {
                return Err(IoError::parse(line, "not a report header"));
            }
            continue;
        }
        if rec.len() != CSV_HEADER.len() {
            return Err(IoError::parse(
                line,
                format!("expected 7 fields, found {}", rec.len()),
            ));
        }
        let num = |i: usize| {
            parse_finite(&rec[i])
                .ok_or_else(|| IoError::parse(line, format!("bad {} `{}`", CSV_HEADER[i], &rec[i])))
        };
        let count = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| IoError::parse(line, format!("bad {} `{}`", CSV_HEADER[i], &rec[i])))
        };
        rows.push(ReportRow {
            channel: rec[0].to_string(),
            group: rec[1].to_string(),
            stats: DeviationStats {
                median: num(2)?,
                average: num(3)?,
                maximum: num(4)?,
                samples: count(5)?,
                gaps: count(6)?,
            },
        });
    }
    if rows.is_empty() {
        return Err(IoError::EmptyReport);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sync::{ComparisonMode, GroupBy};

    fn report(rows: Vec<ReportRow>) -> DeviationReport {
        DeviationReport {
            mode: ComparisonMode::SelfConsistency,
            group_by: GroupBy::exercise_only(),
            reference_repaired: false,
            rows,
        }
    }

    fn knee() -> ReportRow {
        ReportRow {
            channel: "knee_right".into(),
            group: "squat".into(),
            stats: DeviationStats {
                median: 0.11,
                average: 0.11,
                maximum: 0.30,
                samples: 1200,
                gaps: 3,
            },
        }
    }

    #[test]
    fn csv_row_and_round_trip() {
        let csv = emit_report(&report(vec![knee()]), ReportFormat::Csv).unwrap();
        assert_eq!(
            csv,
            "joint,exercise,median_deg,average_deg,maximum_deg,samples,gaps\n\
             knee_right,squat,0.11,0.11,0.30,1200,3\n"
        );
        assert_eq!(parse_report_csv(&csv).unwrap(), vec![knee()]);
    }

    #[test]
    fn text_table() {
        let text = emit_report(&report(vec![knee()]), ReportFormat::Text).unwrap();
        assert!(text.starts_with("mode: self-consistency, reference angles: raw"));
        let last = text.lines().last().unwrap();
        let cols: Vec<&str> = last.split_whitespace().collect();
        assert_eq!(
            cols,
            ["knee_right", "squat", "0.11", "0.11", "0.30", "1200", "3"]
        );
    }

    #[test]
    fn empty_report() {
        assert!(matches!(
            emit_report(&report(vec![]), ReportFormat::Csv),
            Err(IoError::EmptyReport)
        ));
    }
}

use std::fmt::Write as _;
use std::path::Path;

use super::IoError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// SVG line chart of deviation over time: one polyline and one legend entry
/// per `(label, samples)` channel.
pub fn render_plot(series: &[(String, Vec<(f64, f64)>)]) -> Result<String, IoError> {
    if series.is_empty() || series.iter().any(|(_, s)| s.is_empty()) {
        return Err(IoError::EmptySeries);
    }
    let points = || series.iter().flat_map(|(_, s)| s.iter());
    if points().any(|(t, d)| !t.is_finite() || !d.is_finite()) {
        return Err(IoError::EmptySeries);
    }
    let (t0, t1) = span(points().map(|p| p.0));
    let (_, d1) = span(points().map(|p| p.1));
    let d1 = d1.max(1e-9);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |t: f64| MARGIN_LEFT + (t - t0) / (t1 - t0) * plot_w;
    let y = |d: f64| MARGIN_TOP + plot_h - d.max(0.0) / d1 * plot_h;

    let mut svg = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let (left, bottom) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    let _ = writeln!(
        svg,
        "<g class=\"axes\" stroke=\"black\"><line x1=\"{left}\" y1=\"{bottom}\" x2=\"{:.2}\" y2=\"{bottom}\"/><line x1=\"{left}\" y1=\"{MARGIN_TOP}\" x2=\"{left}\" y2=\"{bottom}\"/></g>",
        left + plot_w
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text class=\"tick\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.2}</text>",
            x(t0 + f * (t1 - t0)),
            bottom + 16.0,
            t0 + f * (t1 - t0)
        );
        let _ = writeln!(
            svg,
            "<text class=\"tick\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.2}</text>",
            left - 6.0,
            y(f * d1) + 4.0,
            f * d1
        );
    }
    let _ = writeln!(
        svg,
        "<text class=\"axis-label\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">time [s]</text>",
        left + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        "<text class=\"axis-label\" x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">deviation [°]</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, (label, samples)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = samples
            .iter()
            .map(|&(t, d)| format!("{:.2},{:.2}", x(t), y(d)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            svg,
            "<g class=\"legend\"><line x1=\"{lx}\" y1=\"{ly}\" x2=\"{:.2}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{:.2}\" y=\"{:.2}\">{}</text></g>",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(series: &[(String, Vec<(f64, f64)>)], path: &Path) -> Result<(), IoError> {
    let svg = render_plot(series)?;
    std::fs::write(path, svg).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

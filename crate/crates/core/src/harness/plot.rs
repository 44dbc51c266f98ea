//! Static SVG line plots of result rows.

use std::fmt::Write as _;
use std::path::Path;

use super::output::ResultRow;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    /// Error rates: logarithmic y axis.
    LogY,
    /// Rates in bpcu: linear y axis.
    Linear,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 250.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Curves are keyed by `metric` and `meta`; summary metrics ending in `_db`
/// are not drawn.
fn series(rows: &[ResultRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for row in rows.iter().filter(|r| !r.metric.ends_with("_db")) {
        let label = if row.meta.is_empty() {
            row.metric.clone()
        } else {
            format!("{} {}", row.metric, row.meta)
        };
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((row.sdr_db, row.value)),
            None => out.push(Series {
                label,
                points: vec![(row.sdr_db, row.value)],
            }),
        }
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the rows to an SVG string, or `None` when there is nothing to draw.
pub fn render_svg(rows: &[ResultRow], title: &str, style: PlotStyle) -> Option<String> {
    let series = series(rows);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.is_empty() {
        return None;
    }
    let (mut x0, mut x1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    if x1 <= x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let transform = |y: f64| match style {
        PlotStyle::LogY => y.max(1e-7).log10(),
        PlotStyle::Linear => y,
    };
    let (mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = transform(p.1);
        (lo.min(t), hi.max(t))
    });
    match style {
        PlotStyle::LogY => {
            y0 = y0.floor();
            y1 = y1.ceil().max(y0 + 1.0);
        }
        PlotStyle::Linear => {
            y0 = y0.min(0.0);
            if y1 <= y0 {
                y1 = y0 + 1.0;
            }
        }
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + (1.0 - (transform(y) - y0) / (y1 - y0)) * plot_h;
    let py_raw = |t: f64| TOP + (1.0 - (t - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{0:.1}" y1="{1}" x2="{0:.1}" y2="{2}" stroke="#ddd"/><text x="{0:.1}" y="{3}" text-anchor="middle">{4:.1}</text>"##,
            px(x),
            TOP,
            TOP + plot_h,
            TOP + plot_h + 16.0,
            x
        );
    }
    let ticks: Vec<(f64, String)> = match style {
        PlotStyle::LogY => (y0 as i32..=y1 as i32).map(|e| (e as f64, format!("1e{e}"))).collect(),
        PlotStyle::Linear => (0..=5)
            .map(|i| {
                let t = y0 + (y1 - y0) * i as f64 / 5.0;
                (t, format!("{t:.2}"))
            })
            .collect(),
    };
    for (t, label) in ticks {
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="#ddd"/><text x="{2}" y="{3:.1}" text-anchor="end">{4}</text>"##,
            py_raw(t),
            LEFT + plot_w,
            LEFT - 6.0,
            py_raw(t) + 4.0,
            label
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">SDR [dB]</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Writes the plot to `path`. Empty input writes nothing, logs a warning
/// and returns `false`.
pub fn emit_plot(rows: &[ResultRow], title: &str, style: PlotStyle, path: &Path) -> Result<bool> {
    match render_svg(rows, title, style) {
        Some(svg) => {
            std::fs::write(path, svg)?;
            Ok(true)
        }
        None => {
            log::warn!("no rows to plot for {title}; {} not written", path.display());
            Ok(false)
        }
    }
}

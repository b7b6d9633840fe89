//! Minimal self-contained SVG scatter plots with optional log axes.
//!
//! Every marker carries the CSV text it was drawn from in `data-x` / `data-y`
//! and its data row in `data-row`, so plots can be checked against the table.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 280.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Debug)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub x_raw: String,
    pub y_raw: String,
    /// 1-based data row in the source CSV.
    pub row: usize,
}

impl Point {
    pub fn from_raw(x_raw: &str, y_raw: &str, row: usize) -> Option<Point> {
        Some(Point {
            x: x_raw.parse().ok()?,
            y: y_raw.parse().ok()?,
            x_raw: x_raw.to_string(),
            y_raw: y_raw.to_string(),
            row,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Clone, Debug)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines `(y, label)`.
    pub hlines: Vec<(f64, String)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).collect();
        let (mut lo, mut hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if vals.is_empty() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            lo = 10f64.powf(lo.log10().floor());
            hi = 10f64.powf(hi.log10().ceil());
            if hi <= lo {
                hi = lo * 10.0;
            }
        } else {
            if hi <= lo {
                hi = lo + 1.0;
                lo -= 1.0;
            }
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    /// Position in [0, 1]; values outside the axis are clamped.
    fn unit(&self, v: f64) -> (f64, bool) {
        let t = if self.log {
            if v <= 0.0 || !v.is_finite() {
                return (0.0, true);
            }
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        };
        if t.is_nan() {
            (0.0, true)
        } else {
            (t.clamp(0.0, 1.0), !(0.0..=1.0).contains(&t))
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
            (a..=b).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..=5)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0)
                .collect()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.log10().round() as i32)
    } else {
        format!("{v:.3}")
    }
}

pub fn render(plot: &Plot) -> String {
    let xs = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.x));
    let ys = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.y))
        .chain(plot.hlines.iter().map(|h| h.0));
    let ax = Axis::fit(xs, plot.log_x);
    let ay = Axis::fit(ys, plot.log_y);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| {
        let (t, c) = ax.unit(v);
        (LEFT + t * pw, c)
    };
    let py = |v: f64| {
        let (t, c) = ay.unit(v);
        (TOP + (1.0 - t) * ph, c)
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&plot.title)
    );

    // axes and ticks
    let _ = writeln!(out, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#);
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g class="ticks" fill="black">"#);
    for t in ax.ticks() {
        let (x, _) = px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            tick_label(t, ax.log)
        );
    }
    for t in ay.ticks() {
        let (y, _) = py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t, ay.log)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );

    for (y, label) in &plot.hlines {
        let (yy, _) = py(*y);
        let _ = writeln!(
            out,
            r#"<line class="reference" x1="{LEFT}" y1="{yy:.2}" x2="{}" y2="{yy:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            LEFT + pw
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" fill="gray">{}</text>"#,
            LEFT + pw + 6.0,
            yy + 4.0,
            escape(label)
        );
    }

    for (i, s) in plot.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<g class="series" data-name="{}" fill="{color}">"#,
            escape(&s.name)
        );
        for p in &s.points {
            let (x, cx) = px(p.x);
            let (y, cy) = py(p.y);
            let class = if cx || cy { "point clamped" } else { "point" };
            let _ = writeln!(
                out,
                r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="3.5" data-row="{}" data-x="{}" data-y="{}"/>"#,
                p.row,
                escape(&p.x_raw),
                escape(&p.y_raw)
            );
        }
        let _ = writeln!(out, "</g>");
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{ly}" r="4" fill="{color}"/>"#,
            LEFT + pw + 14.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            LEFT + pw + 24.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

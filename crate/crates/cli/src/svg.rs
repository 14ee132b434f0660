//! Minimal deterministic SVG line/scatter charts.
//!
//! Coordinates are written with two decimals, the viewBox is fixed, and
//! nothing depends on the clock or the environment, so identical inputs give
//! byte-identical documents.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Marker {
    pub label: String,
    pub at: (f64, f64),
}

#[derive(Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Series>,
    pub markers: Vec<Marker>,
    /// Draw the `x = 0` and `y = 0` axes when they fall inside the frame.
    pub origin_axes: bool,
    /// Use the dates (or other labels) for the first and last x tick.
    pub x_tick_labels: Option<(String, String)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, origin: bool) -> Frame {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return Frame {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            };
        }
        if origin {
            x0 = x0.min(0.0);
            x1 = x1.max(0.0);
            y0 = y0.min(0.0);
            y1 = y1.max(0.0);
        }
        let pad = |lo: f64, hi: f64| {
            let span = hi - lo;
            let p = if span > 0.0 {
                0.05 * span
            } else {
                lo.abs().max(1.0) * 0.05
            };
            (lo - p, hi + p)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let all = self
            .lines
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(self.markers.iter().map(|m| m.at));
        let f = Frame::fit(all, self.origin_axes);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            num(WIDTH / 2.0),
            escape(&self.title)
        );
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="dimgray"/>"#,
            num(l),
            num(t),
            num(r - l),
            num(b - t)
        );
        if self.origin_axes {
            let (ox, oy) = (f.px(0.0), f.py(0.0));
            let _ = writeln!(
                out,
                r#"<line class="axis" id="x-axis" x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
                num(l),
                num(oy),
                num(r),
                num(oy)
            );
            let _ = writeln!(
                out,
                r#"<line class="axis" id="y-axis" x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
                num(ox),
                num(t),
                num(ox),
                num(b)
            );
        }
        let (xt0, xt1) = match &self.x_tick_labels {
            Some((a, z)) => (a.clone(), z.clone()),
            None => (tick(f.x0), tick(f.x1)),
        };
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="start">{}</text>"#,
            num(l),
            num(b + 18.0),
            escape(&xt0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(r),
            num(b + 18.0),
            escape(&xt1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(l - 4.0),
            num(b),
            tick(f.y0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(l - 4.0),
            num(t + 10.0),
            tick(f.y1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(WIDTH / 2.0),
            num(HEIGHT - 16.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            num(HEIGHT / 2.0),
            num(HEIGHT / 2.0),
            escape(&self.y_label)
        );
        for (i, s) in self.lines.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{},{}", num(f.px(x)), num(f.py(y))))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                escape(&s.label),
                pts.join(" ")
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                num(r + 6.0 - MARGIN),
                num(t + 16.0 + 14.0 * i as f64),
                escape(&s.label)
            );
        }
        for m in &self.markers {
            let (x, y) = (f.px(m.at.0), f.py(m.at.1));
            let _ = writeln!(
                out,
                r#"<circle data-label="{}" cx="{}" cy="{}" r="3.5" fill="black"/>"#,
                escape(&m.label),
                num(x),
                num(y)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}">{}</text>"#,
                num(x + 5.0),
                num(y - 5.0),
                escape(&m.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

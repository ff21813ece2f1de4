//! Minimal SVG writer and line charts.
//!
//! Coordinates are printed with two decimals so files are byte-stable.

use std::fmt::Write;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn color(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str) {
        let _ = writeln!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" {style}/>"#);
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), style: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" {style}/>"#,
            a.0, a.1, b.0, b.1
        );
    }

    fn points(pts: &[(f64, f64)]) -> String {
        let parts: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        parts.join(" ")
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.len() >= 2 {
            let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" {style}/>"#, Self::points(pts));
        }
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], style: &str) {
        let _ = writeln!(self.body, r#"<polygon points="{}" {style}/>"#, Self::points(pts));
    }

    pub fn circle(&mut self, c: (f64, f64), r: f64, style: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" {style}/>"#, c.0, c.1);
    }

    pub fn text(&mut self, at: (f64, f64), text: &str, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" {style}>{}</text>"#,
            at.0,
            at.1,
            escape(text)
        );
    }

    pub fn finish(self) -> String {
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#,
                "\n",
                r#"<rect width="100%" height="100%" fill="white"/>"#,
                "\n{body}</svg>\n"
            ),
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Roughly five round tick values covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(t: f64) -> String {
    if (t - t.round()).abs() < 1e-9 {
        format!("{}", t.round() as i64)
    } else {
        let s = format!("{t:.2}");
        s.trim_end_matches('0').to_string()
    }
}

pub struct Series {
    pub label: String,
    pub color: &'static str,
    /// Points with `None` break the line.
    pub points: Vec<(f64, Option<f64>)>,
    pub line: bool,
    pub markers: bool,
}

/// Axes, ticks, series and legend in the box `(x, y, w, h)` of `svg`.
pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series>,
    /// Fixed y range; derived from the data when absent.
    pub y_range: Option<(f64, f64)>,
}

impl Chart<'_> {
    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self.series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1));
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-9 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let xr = span(&mut { xs });
        let yr = self.y_range.unwrap_or_else(|| {
            let (lo, hi) = span(&mut { ys });
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        });
        (xr, yr)
    }

    pub fn draw(&self, svg: &mut Svg, x: f64, y: f64, w: f64, h: f64) {
        let (left, right, top, bottom) = (60.0, 110.0, 28.0, 42.0);
        let (px, py, pw, ph) = (x + left, y + top, w - left - right, h - top - bottom);
        let ((x0, x1), (y0, y1)) = self.ranges();
        let sx = |v: f64| px + (v - x0) / (x1 - x0) * pw;
        let sy = |v: f64| py + ph - (v - y0) / (y1 - y0) * ph;
        svg.text((px + 0.5 * pw, y + 18.0), self.title, r#"text-anchor="middle" font-size="14""#);
        svg.rect(px, py, pw, ph, r#"fill="none" stroke="black""#);
        for t in ticks(x0, x1) {
            svg.line((sx(t), py + ph), (sx(t), py + ph + 4.0), r#"stroke="black""#);
            svg.text((sx(t), py + ph + 16.0), &tick_label(t), r#"text-anchor="middle""#);
        }
        for t in ticks(y0, y1) {
            svg.line((px - 4.0, sy(t)), (px, sy(t)), r#"stroke="black""#);
            svg.line((px, sy(t)), (px + pw, sy(t)), r##"stroke="#dddddd""##);
            svg.text((px - 6.0, sy(t) + 4.0), &tick_label(t), r#"text-anchor="end""#);
        }
        svg.text((px + 0.5 * pw, y + h - 6.0), self.x_label, r#"text-anchor="middle""#);
        let (lx, ly) = (x + 14.0, py + 0.5 * ph);
        svg.text(
            (lx, ly),
            self.y_label,
            &format!(r#"text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})""#),
        );
        for s in &self.series {
            let stroke = format!(r#"stroke="{}" stroke-width="1.5""#, s.color);
            if s.line {
                let mut run = Vec::new();
                for &(xv, yv) in &s.points {
                    match yv {
                        Some(yv) => run.push((sx(xv), sy(yv))),
                        None => {
                            svg.polyline(&run, &stroke);
                            run.clear();
                        }
                    }
                }
                svg.polyline(&run, &stroke);
            }
            if s.markers {
                for &(xv, yv) in &s.points {
                    if let Some(yv) = yv {
                        svg.circle((sx(xv), sy(yv)), 2.5, &format!(r#"fill="{}""#, s.color));
                    }
                }
            }
        }
        let mut seen: Vec<&str> = Vec::new();
        let mut row = 0.0;
        for s in &self.series {
            if s.label.is_empty() || seen.contains(&s.label.as_str()) {
                continue;
            }
            seen.push(&s.label);
            let (ax, ay) = (px + pw + 12.0, py + 10.0 + 18.0 * row);
            svg.line((ax, ay), (ax + 18.0, ay), &format!(r#"stroke="{}" stroke-width="2""#, s.color));
            svg.text((ax + 24.0, ay + 4.0), &s.label, "");
            row += 1.0;
        }
    }
}

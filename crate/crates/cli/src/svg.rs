// SPDX-License-Identifier: MIT OR Apache-2.0

//! Hand-written SVG charts. Coordinates are printed with two decimals so
//! identical inputs give identical files.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

pub const CERTAIN_COLOR: &str = "#1f77b4";
pub const UNCERTAIN_COLOR: &str = "#d62728";

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear map from a data range onto a pixel range. Degenerate ranges are
/// widened so a flat series still lands mid-axis.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if (hi - lo).abs() < 1e-12 {
            let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
            (lo - pad, hi + pad)
        } else {
            let pad = (hi - lo) * 0.05;
            (lo - pad, hi + pad)
        };
        Self { lo, hi, px_lo, px_hi }
    }

    fn at(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64)
            .collect()
    }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
}

fn y_axis(out: &mut String, y: &Scale) {
    for t in y.ticks(5) {
        let py = y.at(t);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT - 6.0,
            py + 4.0,
            tick_label(t)
        );
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

/// Line chart of `values` over layer index with a shaded band from `low` to
/// `high`.
pub fn line_with_band(title: &str, y_label: &str, values: &[f64], low: &[f64], high: &[f64]) -> String {
    let mut out = String::new();
    frame(&mut out, title, "layer", y_label);
    let n = values.len();
    let x = Scale::new(0.0, n.saturating_sub(1) as f64, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y_lo = low.iter().chain(values).copied().fold(f64::INFINITY, f64::min);
    let y_hi = high.iter().chain(values).copied().fold(f64::NEG_INFINITY, f64::max);
    let y = Scale::new(y_lo.min(0.0), y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    y_axis(&mut out, &y);

    let step = (n / 12).max(1);
    for i in (0..n).step_by(step) {
        let px = x.at(i as f64);
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{i}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0
        );
    }

    if n > 0 {
        let mut band = String::new();
        for (i, &v) in high.iter().enumerate() {
            let _ = write!(band, "{:.2},{:.2} ", x.at(i as f64), y.at(v));
        }
        for (i, &v) in low.iter().enumerate().rev() {
            let _ = write!(band, "{:.2},{:.2} ", x.at(i as f64), y.at(v));
        }
        let _ = writeln!(
            out,
            r#"<polygon class="ci-band" points="{}" fill="{CERTAIN_COLOR}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x.at(i as f64), y.at(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="msu" points="{}" fill="none" stroke="{CERTAIN_COLOR}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for (i, &v) in values.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{CERTAIN_COLOR}"><title>layer {i}: {v:.6}</title></circle>"#,
                x.at(i as f64),
                y.at(v)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter of two labelled point sets with a cross at each centroid.
pub fn scatter_two_classes(
    title: &str,
    certain: &[[f64; 2]],
    uncertain: &[[f64; 2]],
    centroids: [[f64; 2]; 2],
) -> String {
    let mut out = String::new();
    frame(&mut out, title, "PC1", "PC2");
    let all = || certain.iter().chain(uncertain).chain(centroids.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all() {
        x_lo = x_lo.min(p[0]);
        x_hi = x_hi.max(p[0]);
        y_lo = y_lo.min(p[1]);
        y_hi = y_hi.max(p[1]);
    }
    let x = Scale::new(x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Scale::new(y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    y_axis(&mut out, &y);
    for t in x.ticks(5) {
        let px = x.at(t);
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            tick_label(t)
        );
    }
    for (class, points, color) in [
        ("certain", certain, CERTAIN_COLOR),
        ("uncertain", uncertain, UNCERTAIN_COLOR),
    ] {
        let _ = writeln!(out, r#"<g class="{class}" fill="{color}" fill-opacity="0.7">"#);
        for p in points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, x.at(p[0]), y.at(p[1]));
        }
        out.push_str("</g>\n");
    }
    for (class, c, color) in [
        ("centroid-certain", centroids[0], CERTAIN_COLOR),
        ("centroid-uncertain", centroids[1], UNCERTAIN_COLOR),
    ] {
        let (cx, cy) = (x.at(c[0]), y.at(c[1]));
        let _ = writeln!(
            out,
            r#"<path class="{class}" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="3"/>"#,
            cx - 7.0,
            cy - 7.0,
            cx + 7.0,
            cy + 7.0,
            cx - 7.0,
            cy + 7.0,
            cx + 7.0,
            cy - 7.0
        );
    }
    let legend_y = MARGIN_TOP + 14.0;
    let _ = writeln!(
        out,
        r#"<circle cx="{:.2}" cy="{legend_y:.2}" r="4" fill="{CERTAIN_COLOR}"/><text x="{:.2}" y="{:.2}">certain</text>"#,
        WIDTH - MARGIN_RIGHT - 90.0,
        WIDTH - MARGIN_RIGHT - 82.0,
        legend_y + 4.0
    );
    let _ = writeln!(
        out,
        r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{UNCERTAIN_COLOR}"/><text x="{:.2}" y="{:.2}">uncertain</text>"#,
        WIDTH - MARGIN_RIGHT - 90.0,
        legend_y + 16.0,
        WIDTH - MARGIN_RIGHT - 82.0,
        legend_y + 20.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_series_renders() {
        let svg = line_with_band("t", "MSU", &[0.0, 0.0, 0.0], &[0.0; 3], &[0.0; 3]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("class=\"ci-band\""));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn scatter_marks_centroids() {
        let svg = scatter_two_classes("t", &[[0.0, 1.0]], &[[1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]]);
        assert!(svg.contains("centroid-certain") && svg.contains("centroid-uncertain"));
        assert_eq!(svg.matches("<circle").count(), 4);
    }

    #[test]
    fn titles_are_escaped() {
        let svg = line_with_band("a<b & c", "y", &[1.0], &[1.0], &[1.0]);
        assert!(svg.contains("a&lt;b &amp; c"));
    }
}

//! Minimal line plots as SVG. Output depends only on the data, so reruns
//! produce identical files.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 48.0;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    /// Separate polylines (e.g. an orbit cut where `q` wraps).
    pub pieces: Vec<Vec<(f64, f64)>>,
}

impl Series {
    pub fn line(label: impl Into<String>, color: &'static str, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            color,
            dashed: false,
            pieces: vec![points],
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
    /// Marked points with a label.
    pub marks: Vec<(f64, f64, String)>,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Plot {
            title: title.into(),
            x_label: "x".into(),
            y_label: "y".into(),
            x_range,
            y_range,
            series: vec![],
            marks: vec![],
        }
    }

    pub fn labels(mut self, x: &str, y: &str) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }

    /// Tight `y` range over all series, padded by 5%.
    pub fn fit_y(mut self) -> Self {
        let (lo, hi) = self
            .series
            .iter()
            .flat_map(|s| s.pieces.iter().flatten())
            .filter(|(x, _)| *x >= self.x_range.0 && *x <= self.x_range.1)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, y)| (lo.min(*y), hi.max(*y)));
        if lo.is_finite() && hi.is_finite() {
            let pad = 0.05 * (hi - lo).max(1e-9);
            self.y_range = (lo - pad, hi + pad);
        }
        self
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (W - 2.0 * MARGIN)
    }

    fn sy(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (H - 2.0 * MARGIN)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        // frame and axis labels
        let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for (v, anchor_x) in [(self.x_range.0, x0), (self.x_range.1, x1)] {
            let _ = writeln!(s, r#"<text x="{anchor_x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y1 + 14.0, num(v));
        }
        for (v, anchor_y) in [(self.y_range.0, y1), (self.y_range.1, y0)] {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 4.0, anchor_y + 4.0, num(v));
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(s, r#"<clipPath id="frame"><rect x="{x0}" y="{y0}" width="{}" height="{}"/></clipPath>"#, x1 - x0, y1 - y0);
        let _ = writeln!(s, r#"<g clip-path="url(#frame)" fill="none" stroke-width="1.5">"#);
        for series in &self.series {
            let dash = if series.dashed { r#" stroke-dasharray="5 4""# } else { "" };
            for piece in &series.pieces {
                if piece.len() < 2 {
                    continue;
                }
                let pts: Vec<String> = piece
                    .iter()
                    .map(|(x, y)| format!("{:.2},{:.2}", self.sx(*x), self.sy(*y)))
                    .collect();
                let _ = writeln!(s, r#"<polyline stroke="{}"{dash} points="{}"/>"#, series.color, pts.join(" "));
            }
        }
        let _ = writeln!(s, "</g>");
        for (x, y, label) in &self.marks {
            let (px, py) = (self.sx(*x), self.sy(*y));
            let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="black"/>"#);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, px + 5.0, py - 5.0, escape(label));
        }
        // legend
        for (i, series) in self.series.iter().enumerate() {
            let y = y0 + 14.0 + 14.0 * i as f64;
            let dash = if series.dashed { r#" stroke-dasharray="5 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}"{dash} stroke-width="1.5"/>"#,
                x1 - 120.0,
                x1 - 100.0,
                series.color
            );
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x1 - 95.0, y + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn num(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Split a sampled curve `(q, p)` at the points where `q` mod 1 wraps.
pub fn wrap_pieces(points: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let mut pieces = vec![];
    let mut current: Vec<(f64, f64)> = vec![];
    for &(q, p) in points {
        let w = q.rem_euclid(1.0);
        if let Some(&(last, _)) = current.last() {
            if (w - last).abs() > 0.5 {
                pieces.push(std::mem::take(&mut current));
            }
        }
        current.push((w, p));
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    pieces
}

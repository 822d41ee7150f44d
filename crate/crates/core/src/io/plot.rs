//! Minimal SVG line/scatter plots with an optional filled band.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Line { label: String, color: String, points: Vec<(f64, f64)> },
    Scatter { label: String, color: String, points: Vec<(f64, f64)> },
    /// Filled region between `lower` and `upper` at shared x positions.
    Band { label: String, color: String, x: Vec<f64>, lower: Vec<f64>, upper: Vec<f64> },
}

impl Series {
    pub fn line(label: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        Series::Line { label: label.into(), color: color.into(), points }
    }

    pub fn scatter(label: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        Series::Scatter { label: label.into(), color: color.into(), points }
    }

    pub fn band(label: &str, color: &str, x: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Series::Band { label: label.into(), color: color.into(), x, lower, upper }
    }

    fn label(&self) -> (&str, &str) {
        match self {
            Series::Line { label, color, .. } | Series::Scatter { label, color, .. } | Series::Band { label, color, .. } => {
                (label, color)
            }
        }
    }

    fn extent(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (a, b): (Vec<_>, Vec<_>) = match self {
            Series::Line { points, .. } | Series::Scatter { points, .. } => (points.clone(), Vec::new()),
            Series::Band { x, lower, upper, .. } => (
                x.iter().copied().zip(lower.iter().copied()).collect(),
                x.iter().copied().zip(upper.iter().copied()).collect(),
            ),
        };
        a.into_iter().chain(b).filter(|(x, y)| x.is_finite() && y.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let (xt, yt) = (ticks(x0, x1), ticks(y0, y1));
        let (x0, x1) = (x0.min(xt[0]), x1.max(*xt.last().unwrap()));
        let (y0, y1) = (y0.min(yt[0]), y1.max(*yt.last().unwrap()));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        for &t in &xt {
            let x = sx(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e4e4e4"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(t));
        }
        for &t in &yt {
            let y = sy(t);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e4e4e4"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t));
        }
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for series in &self.series {
            match series {
                Series::Band { color, x, lower, upper, .. } => {
                    let mut pts: Vec<String> = x.iter().zip(lower).map(|(&a, &b)| format!("{:.2},{:.2}", sx(a), sy(b))).collect();
                    pts.extend(x.iter().zip(upper).rev().map(|(&a, &b)| format!("{:.2},{:.2}", sx(a), sy(b))));
                    let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.3" stroke="none"/>"#, pts.join(" "));
                }
                Series::Line { color, points, .. } => {
                    let pts: Vec<String> = points
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#, pts.join(" "));
                }
                Series::Scatter { color, points, .. } => {
                    for &(x, y) in points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, sx(x), sy(y));
                    }
                }
            }
        }

        for (k, series) in self.series.iter().enumerate() {
            let (label, color) = series.label();
            let y = TOP + 14.0 + 16.0 * k as f64;
            let x = LEFT + pw - 150.0;
            let _ = writeln!(s, r#"<rect x="{x:.2}" y="{:.2}" width="12" height="8" fill="{color}"/>"#, y - 8.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 18.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in self.series.iter().flat_map(Series::extent) {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let widen = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                let d = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
                (lo - d, hi + d)
            }
        };
        let (x0, x1) = widen(b.0, b.1);
        let (y0, y1) = widen(b.2, b.3);
        (x0, x1, y0, y1)
    }
}

/// Round tick positions covering [lo, hi] with 1/2/5 spacing.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).floor() as i64;
    let end = (hi / step).ceil() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = ticks(0.13, 0.87);
        assert!(t[0] <= 0.13 && *t.last().unwrap() >= 0.87);
        assert!(t.len() >= 4 && t.len() <= 12);
        let t = ticks(3.5e3, 4.8e3);
        assert!((t[1] - t[0] - 500.0).abs() < 1e-9);
    }

    #[test]
    fn renders_every_series_kind() {
        let svg = Plot::new("f vs length", "length (µm)", "f (GHz)")
            .with(Series::band("L_k band", "#88aadd", vec![1.0, 2.0], vec![5.0, 4.0], vec![5.5, 4.4]))
            .with(Series::line("nominal", "#1f4e9a", vec![(1.0, 5.2), (2.0, 4.2)]))
            .with(Series::scatter("measured", "#c0392b", vec![(1.5, 4.6), (f64::NAN, 1.0)]))
            .to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("length (µm)"));
    }

    #[test]
    fn degenerate_data_still_renders() {
        let svg = Plot::new("a < b", "x", "y").with(Series::scatter("one", "black", vec![(2.0, 3.0)])).to_svg();
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("NaN"));
        assert!(Plot::new("empty", "x", "y").to_svg().contains("</svg>"));
    }
}

//! Minimal polyline SVG plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: [f64; 4] = [70.0, 20.0, 40.0, 60.0]; // left, right, top, bottom
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.to_string(),
            points,
            style: Style::Line,
        }
    }

    pub fn markers(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.to_string(),
            points,
            style: Style::Markers,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        let pad = 0.04 * (hi - lo);
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    /// Fraction of the way from `lo` to `hi`.
    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                return (a..=b).map(|k| (10f64.powi(k), format!("1e{k}"))).collect();
            }
        }
        (0..=4)
            .map(|k| {
                let u = self.lo + (self.hi - self.lo) * (0.04 + 0.92 * k as f64 / 4.0);
                let v = if self.log { 10f64.powf(u) } else { u };
                (v, format!("{v:.3}"))
            })
            .collect()
    }
}

fn usable(p: &(f64, f64), log_x: bool, log_y: bool) -> bool {
    p.0.is_finite() && p.1.is_finite() && (!log_x || p.0 > 0.0) && (!log_y || p.1 > 0.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let pts = || {
            self.series
                .iter()
                .flat_map(|s| s.points.iter())
                .filter(|p| usable(p, self.log_x, self.log_y))
        };
        let ax = Axis::fit(pts().map(|p| p.0), self.log_x);
        let ay = Axis::fit(pts().map(|p| p.1), self.log_y);
        let (w, h) = (
            WIDTH - MARGIN[0] - MARGIN[1],
            HEIGHT - MARGIN[2] - MARGIN[3],
        );
        let px = |x: f64| MARGIN[0] + w * ax.frac(x);
        let py = |y: f64| MARGIN[2] + h * (1.0 - ay.frac(y));

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
            MARGIN[0], MARGIN[2]
        );
        for (v, label) in ax.ticks() {
            let x = px(v);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/>"##,
                MARGIN[2],
                MARGIN[2] + h
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                MARGIN[2] + h + 16.0
            );
        }
        for (v, label) in ay.ticks() {
            let y = py(v);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/>"##,
                MARGIN[0],
                MARGIN[0] + w
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                MARGIN[0] - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN[0] + w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN[0] + w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN[2] + h / 2.0,
            MARGIN[2] + h / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let pts: Vec<_> = series
                .points
                .iter()
                .filter(|p| usable(p, self.log_x, self.log_y))
                .collect();
            match series.style {
                Style::Line => {
                    let coords: Vec<String> = pts
                        .iter()
                        .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1)))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        coords.join(" ")
                    );
                }
                Style::Markers => {
                    for p in pts {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                            px(p.0),
                            py(p.1)
                        );
                    }
                }
            }
            let ly = MARGIN[2] + 16.0 + 16.0 * k as f64;
            let lx = MARGIN[0] + w - 150.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="4" fill="{color}"/>"#,
                ly - 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
                lx + 18.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

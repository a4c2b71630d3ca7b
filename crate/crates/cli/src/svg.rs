//! Minimal SVG line charts. Charts are drawn from the rows of a CSV file so
//! a plot never shows anything the data file does not contain.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    /// Extra line under the plot, e.g. a topology definition.
    pub caption: Option<String>,
    pub series: Vec<Series>,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1e-3);
        return (lo - pad, hi + pad);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl LineChart {
    pub fn render(&self) -> String {
        let tx = |x: f64| if self.log_x { x.ln() } else { x };
        let (x0, x1) = bounds(self.series.iter().flat_map(|s| s.points.iter().map(|p| tx(p.0))));
        let (y0, y1) = bounds(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |x: f64| MARGIN_LEFT + (tx(x) - x0) / (x1 - x0) * pw;
        let py = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=TICKS {
            let f = k as f64 / TICKS as f64;
            let xv = x0 + f * (x1 - x0);
            let xv = if self.log_x { xv.exp() } else { xv };
            let yv = y0 + f * (y1 - y0);
            let (gx, gy) = (MARGIN_LEFT + f * pw, MARGIN_TOP + (1.0 - f) * ph);
            let _ = writeln!(
                s,
                r##"<line x1="{gx:.2}" y1="{}" x2="{gx:.2}" y2="{}" stroke="#888"/><text x="{gx:.2}" y="{}" text-anchor="middle">{}</text>"##,
                MARGIN_TOP + ph,
                MARGIN_TOP + ph + 5.0,
                MARGIN_TOP + ph + 18.0,
                escape(&tick_label(xv))
            );
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{gy:.2}" x2="{MARGIN_LEFT}" y2="{gy:.2}" stroke="#888"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                MARGIN_LEFT - 5.0,
                MARGIN_LEFT - 8.0,
                gy + 4.0,
                escape(&tick_label(yv))
            );
        }
        let x_label = if self.log_x {
            format!("{} (log scale)", self.x_label)
        } else {
            self.x_label.clone()
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            HEIGHT - 22.0,
            escape(&x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            MARGIN_TOP + ph / 2.0,
            escape(&self.y_label)
        );
        if let Some(c) = &self.caption {
            let _ = writeln!(
                s,
                r#"<text x="{MARGIN_LEFT}" y="{}" font-size="10">{}</text>"#,
                HEIGHT - 6.0,
                escape(c)
            );
        }
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                escape(&series.name),
                pts.join(" ")
            );
            let ly = MARGIN_TOP + 14.0 + 18.0 * k as f64;
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

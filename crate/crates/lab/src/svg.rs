//! Minimal static SVG line plots, drawn from CSV text alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::io::read_csv_columns;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub file: String,
    pub title: String,
    pub x: String,
    pub y: String,
    /// One polyline per distinct value of this column.
    pub group: Option<String>,
    pub log_x: bool,
    pub log_y: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn col(header: &[String], name: &str) -> Result<usize, LabError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| LabError::Parse(format!("no column `{name}`")))
}

pub fn render(csv_text: &str, spec: &PlotSpec) -> Result<String, LabError> {
    let (header, rows) = read_csv_columns(csv_text)?;
    let (xi, yi) = (col(&header, &spec.x)?, col(&header, &spec.y)?);
    let gi = spec.group.as_deref().map(|g| col(&header, g)).transpose()?;
    let tx = |v: f64, log: bool| if log { v.log10() } else { v };
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        let (Ok(x), Ok(y)) = (r[xi].parse::<f64>(), r[yi].parse::<f64>()) else {
            continue;
        };
        let (x, y) = (tx(x, spec.log_x), tx(y, spec.log_y));
        if x.is_finite() && y.is_finite() {
            let key = gi.map_or_else(String::new, |g| format!("{}={}", spec.group.as_deref().unwrap_or(""), r[g]));
            series.entry(key).or_default().push((x, y));
        }
    }
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let axis = |name: &str, log: bool| if log { format!("log10 {name}") } else { name.to_string() };

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(&spec.title)).unwrap();
    writeln!(s, r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - PAD, W - PAD, H - PAD).unwrap();
    writeln!(s, r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#, H - PAD).unwrap();
    for k in 0..=4 {
        let t = f64::from(k) / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.3}</text>"#, px(xv), H - PAD + 18.0, xv).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#, PAD - 6.0, py(yv) + 4.0, yv).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, escape(&axis(&spec.x, spec.log_x))).unwrap();
    writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, escape(&axis(&spec.y, spec.log_y))).unwrap();
    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, path.join(" ")).unwrap();
        for &(x, y) in pts {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(x), py(y)).unwrap();
        }
        if !name.is_empty() {
            writeln!(s, r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#, W - PAD + 4.0, PAD + 16.0 * i as f64, escape(name)).unwrap();
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

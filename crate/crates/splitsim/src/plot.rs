//! Static SVG charts for the sweep and eye CSV files. Output depends only
//! on the input table, so identical CSVs give identical bytes.

use std::fmt::Write as _;

use crate::csvio::{Table, EYE_HEADER, FIG3_HEADER, FIG4_HEADER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Fig3,
    Fig4,
    Eye,
}

impl PlotKind {
    pub fn detect(headers: &[String]) -> Option<PlotKind> {
        let eq = |h: &[&str]| headers.len() == h.len() && headers.iter().zip(h).all(|(a, b)| a == b);
        if eq(&FIG3_HEADER) {
            Some(PlotKind::Fig3)
        } else if eq(&FIG4_HEADER) {
            Some(PlotKind::Fig4)
        } else if eq(&EYE_HEADER) {
            Some(PlotKind::Eye)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotError {
    Empty,
    Schema(String),
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::Empty => write!(f, "CSV has no data rows"),
            PlotError::Schema(m) => write!(f, "CSV does not match the plot schema: {m}"),
        }
    }
}

impl std::error::Error for PlotError {}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLOURS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn number(table: &Table, row: usize, col: usize) -> Result<f64, PlotError> {
    let cell = &table.rows[row][col];
    cell.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| PlotError::Schema(format!("row {}: `{cell}` is not a number", row + 1)))
}

/// Groups rows by the `group` column, keeping first-appearance order.
fn series(table: &Table, group: usize, label: impl Fn(&str) -> String) -> Result<Vec<Series>, PlotError> {
    let x = table.column("bitrate_mbps").expect("checked by detect");
    let y = table.column("per").expect("checked by detect");
    let mut out: Vec<Series> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != table.headers.len() {
            return Err(PlotError::Schema(format!("row {} has {} fields", i + 1, row.len())));
        }
        let name = label(&row[group]);
        let point = (number(table, i, x)?, 100.0 * number(table, i, y)?);
        match out.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push(point),
            None => out.push(Series { name, points: vec![point] }),
        }
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}

/// About five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0);
}

fn line_chart(title: &str, series: &[Series], x_label: &str, y_label: &str) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let y1 = if y1 <= 0.0 { 1.0 } else { y1 * 1.1 };
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - y / y1 * ph;

    let mut svg = String::new();
    header(&mut svg, title);
    let _ = writeln!(svg, r##"<g stroke="#000" fill="none"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></g>"##);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 19.0, tick_label(t));
    }
    for t in ticks(0.0, y1) {
        let y = sy(t);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#, LEFT + pw / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{y_label}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let c = COLOURS[i % COLOURS.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, path.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/>"#, lx + 22.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, ly + 4.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn eye_chart(table: &Table) -> Result<String, PlotError> {
    let mut cells = Vec::with_capacity(table.rows.len());
    let (mut phases, mut bins, mut peak) = (0usize, 0usize, 0u64);
    for (i, row) in table.rows.iter().enumerate() {
        let parse = |j: usize| {
            row.get(j)
                .and_then(|c| c.parse::<u64>().ok())
                .ok_or_else(|| PlotError::Schema(format!("row {} is not three integers", i + 1)))
        };
        let (p, b, c) = (parse(0)? as usize, parse(1)? as usize, parse(2)?);
        phases = phases.max(p + 1);
        bins = bins.max(b + 1);
        peak = peak.max(c);
        cells.push((p, b, c));
    }
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let (cw, chh) = (pw / phases as f64, ph / bins as f64);
    let mut svg = String::new();
    header(&mut svg, "PAM4 eye diagram");
    let _ = writeln!(svg, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="#000"/>"##);
    let scale = ((peak + 1) as f64).ln();
    for (p, b, c) in cells {
        if c == 0 {
            continue;
        }
        let v = (((c + 1) as f64).ln() / scale * 255.0).round() as u8;
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#{v:02x}{v:02x}{:02x}"/>"##,
            LEFT + p as f64 * cw,
            TOP + ph - (b + 1) as f64 * chh,
            cw,
            chh,
            v / 2
        );
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">phase bin (two symbol periods)</text>"#, LEFT + pw / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">amplitude bin</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders `table` as `kind`, or the kind its header implies.
pub fn render(table: &Table, kind: Option<PlotKind>) -> Result<String, PlotError> {
    let detected = PlotKind::detect(&table.headers);
    let kind = match (kind, detected) {
        (Some(k), Some(d)) if k != d => {
            return Err(PlotError::Schema(format!("header is {d:?}, not {k:?}")));
        }
        (_, Some(d)) => d,
        (_, None) => return Err(PlotError::Schema(format!("unrecognised header {:?}", table.headers))),
    };
    if table.rows.is_empty() {
        return Err(PlotError::Empty);
    }
    match kind {
        PlotKind::Fig3 => {
            let s = series(table, 1, str::to_string)?;
            Ok(line_chart("PER vs bit-rate under BER degradation", &s, "bit-rate (Mb/s)", "PER (%)"))
        }
        PlotKind::Fig4 => {
            let s = series(table, 1, |j| format!("jitter {} ms", tick_label(j.parse().unwrap_or(f64::NAN))))?;
            Ok(line_chart("PER vs bit-rate under induced jitter", &s, "bit-rate (Mb/s)", "PER (%)"))
        }
        PlotKind::Eye => eye_chart(table),
    }
}

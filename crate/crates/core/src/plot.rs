//! Minimal SVG line charts: one panel per metric, mean line with a ±1 sd band.

use std::fmt::Write;

pub struct Panel {
    pub title: String,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Fix the y axis to [0, 1].
    pub unit_range: bool,
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 40.0;
const MAX_POINTS: usize = 500;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(title: &str, panels: &[Panel]) -> String {
    let cols = 2usize;
    let rows = panels.len().div_ceil(cols).max(1);
    let width = cols as f64 * (PANEL_W + MARGIN) + MARGIN;
    let height = rows as f64 * (PANEL_H + 2.0 * MARGIN) + MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="20" font-size="14">{}</text>"#, escape(title));
    for (k, p) in panels.iter().enumerate() {
        let ox = MARGIN + (k % cols) as f64 * (PANEL_W + MARGIN);
        let oy = 2.0 * MARGIN + (k / cols) as f64 * (PANEL_H + 2.0 * MARGIN);
        draw_panel(&mut svg, p, ox, oy);
    }
    svg.push_str("</svg>\n");
    svg
}

fn draw_panel(svg: &mut String, p: &Panel, ox: f64, oy: f64) {
    let n = p.mean.len();
    let sd: Vec<f64> = p.variance.iter().map(|v| v.max(0.0).sqrt()).collect();
    let (lo, hi) = if p.unit_range {
        (0.0, 1.0)
    } else {
        let hi = p.mean.iter().zip(&sd).map(|(m, s)| m + s).fold(0.0f64, f64::max);
        (0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 })
    };
    let x = |i: usize| ox + if n > 1 { i as f64 / (n - 1) as f64 * PANEL_W } else { 0.0 };
    let y = |v: f64| oy + PANEL_H - ((v - lo) / (hi - lo)).clamp(0.0, 1.0) * PANEL_H;
    let step = n.div_ceil(MAX_POINTS).max(1);
    let idx: Vec<usize> = (0..n).step_by(step).chain((n > 0).then_some(n - 1)).collect();

    let _ = writeln!(svg, r#"<text x="{ox}" y="{}">{}</text>"#, oy - 8.0, escape(&p.title));
    let _ = writeln!(
        svg,
        r#"<rect x="{ox}" y="{oy}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{hi:.2}</text>"#, ox - 4.0, oy + 10.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{lo:.2}</text>"#, ox - 4.0, oy + PANEL_H);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        ox + PANEL_W,
        oy + PANEL_H + 14.0,
        n
    );
    if idx.is_empty() {
        return;
    }
    let mut band = String::new();
    for &i in &idx {
        let _ = write!(band, "{:.2},{:.2} ", x(i), y(p.mean[i] + sd[i]));
    }
    for &i in idx.iter().rev() {
        let _ = write!(band, "{:.2},{:.2} ", x(i), y(p.mean[i] - sd[i]));
    }
    let _ = writeln!(svg, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##, band.trim_end());
    let line: Vec<String> = idx.iter().map(|&i| format!("{:.2},{:.2}", x(i), y(p.mean[i]))).collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##,
        line.join(" ")
    );
}

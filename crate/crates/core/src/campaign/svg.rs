//! Minimal deterministic SVG charts.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

/// Tick label with at most 4 significant digits.
fn label(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.*}", (3 - x.abs().log10().floor() as i32).clamp(0, 6) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Data range padded so that a flat series still has a visible axis.
fn range(values: impl Iterator<Item = f64>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if include_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = if include_zero && lo == 0.0 { 0.0 } else { 0.05 * (hi - lo) };
    (lo - pad, hi + 0.05 * (hi - lo))
}

struct Frame {
    out: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, num((LEFT + W - RIGHT) / 2.0), esc(title));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num((LEFT + W - RIGHT) / 2.0), num(H - 16.0), esc(x_label));
        let _ = writeln!(out, r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#, num((TOP + H - BOTTOM) / 2.0), esc(y_label));
        Self { out, x, y }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn axes(&mut self, x_ticks: bool) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        for t in ticks(self.y.0, self.y.1) {
            let y = self.py(t);
            let _ = writeln!(self.out, r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#dddddd"/>"##, num(x0), num(y), num(x1));
            let _ = writeln!(self.out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, num(x0 - 6.0), num(y + 4.0), label(t));
        }
        if x_ticks {
            for t in ticks(self.x.0, self.x.1) {
                let x = self.px(t);
                let _ = writeln!(self.out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(x), num(y0 + 18.0), label(t));
            }
        }
        let _ = writeln!(self.out, r#"<polyline points="{},{} {},{} {},{}" fill="none" stroke="black"/>"#, num(x0), num(y1), num(x0), num(y0), num(x1), num(y0));
    }

    fn legend(&mut self, names: &[String]) {
        for (i, n) in names.iter().enumerate() {
            let y = TOP + 10.0 + 20.0 * i as f64;
            let x = W - RIGHT + 14.0;
            let _ = writeln!(self.out, r#"<rect x="{}" y="{}" width="12" height="12" fill="{}"/>"#, num(x), num(y - 10.0), color(i));
            let _ = writeln!(self.out, r#"<text x="{}" y="{}">{}</text>"#, num(x + 18.0), num(y), esc(n));
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Grouped bars, one group per category and one bar per series. Missing
/// values leave a gap.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, categories: &[String], series: &[(String, Vec<Option<f64>>)], y_max: Option<f64>) -> String {
    let values = series.iter().flat_map(|s| s.1.iter().flatten().copied());
    let (lo, hi) = range(values, true);
    let mut f = Frame::new(title, x_label, y_label, (0.0, categories.len().max(1) as f64), (lo, y_max.unwrap_or(hi)));
    f.axes(false);
    let group = (W - LEFT - RIGHT) / categories.len().max(1) as f64;
    let bar = 0.8 * group / series.len().max(1) as f64;
    for (c, name) in categories.iter().enumerate() {
        let gx = LEFT + c as f64 * group;
        let _ = writeln!(f.out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(gx + group / 2.0), num(H - BOTTOM + 18.0), esc(name));
        for (s, (_, v)) in series.iter().enumerate() {
            if let Some(v) = v.get(c).copied().flatten() {
                let (y, base) = (f.py(v), f.py(0.0));
                let _ = writeln!(
                    f.out,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                    num(gx + 0.1 * group + s as f64 * bar),
                    num(y.min(base)),
                    num(bar),
                    num((base - y).abs()),
                    color(s)
                );
            }
        }
    }
    f.legend(&series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    f.finish()
}

/// Point series, optionally joined by lines.
pub fn xy_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)], lines: bool) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)), false);
    let (y0, y1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)), false);
    let mut f = Frame::new(title, x_label, y_label, (x0, x1), (y0, y1));
    f.axes(true);
    for (s, (_, pts)) in series.iter().enumerate() {
        if lines && pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", num(f.px(x)), num(f.py(y)))).collect();
            let _ = writeln!(f.out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, path.join(" "), color(s));
        }
        for &(x, y) in pts {
            let _ = writeln!(f.out, r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#, num(f.px(x)), num(f.py(y)), color(s));
        }
    }
    f.legend(&series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    f.finish()
}

/// Square matrix of values with row and column labels; empty cells for
/// missing values. Blue below 1, red above.
pub fn heatmap(title: &str, labels: &[String], cells: &[Vec<Option<f64>>]) -> String {
    let n = labels.len().max(1);
    let mut out = String::new();
    let size = (W - 2.0 * LEFT - RIGHT).min(H - TOP - BOTTOM - 40.0) / n as f64;
    let (ox, oy) = (LEFT + 80.0, TOP + 40.0);
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, num(W / 2.0), esc(title));
    for (i, l) in labels.iter().enumerate() {
        let c = num(oy + (i as f64 + 0.5) * size + 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{c}" text-anchor="end">{}</text>"#, num(ox - 6.0), esc(l));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(ox + (i as f64 + 0.5) * size), num(oy - 8.0), esc(l));
    }
    for (i, row) in cells.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let (x, y) = (ox + j as f64 * size, oy + i as f64 * size);
            let fill = match v {
                Some(v) if v.is_finite() && *v > 0.0 => {
                    // Log scale, saturating at a factor of 4.
                    let s = (v.ln() / 4f64.ln()).clamp(-1.0, 1.0);
                    let fade = (255.0 * (1.0 - s.abs())).round() as u8;
                    if s >= 0.0 {
                        format!("#ff{fade:02x}{fade:02x}")
                    } else {
                        format!("#{fade:02x}{fade:02x}ff")
                    }
                }
                _ => "#eeeeee".to_string(),
            };
            let _ = writeln!(out, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="white"/>"#, num(x), num(y), num(size), num(size));
            let text = v.map(label).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{text}</text>"#, num(x + size / 2.0), num(y + size / 2.0 + 4.0));
        }
    }
    out.push_str("</svg>\n");
    out
}

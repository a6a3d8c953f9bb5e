//! Minimal SVG line charts: stacked panels, polylines, circles, axis ticks.

use std::fmt::Write as _;

const WIDTH: f64 = 860.0;
const PANEL_H: f64 = 300.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;
/// Polylines are reduced to about this many points (min/max per bucket).
const MAX_POINTS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub circles: Vec<Circle>,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * span { 0.0 } else { t });
        t += step;
    }
    out
}

/// Short tick text without accumulated float noise (`0.30000000000000004`).
fn tick_label(t: f64) -> String {
    if t != 0.0 && t.abs() < 1e-4 {
        return format!("{t:.2e}");
    }
    let s = format!("{t:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn decimate(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let per = (2 * points.len()).div_ceil(MAX_POINTS);
    let mut out = Vec::with_capacity(MAX_POINTS + 2);
    for chunk in points.chunks(per) {
        let (imin, imax) = chunk.iter().enumerate().fold((0, 0), |(a, b), (i, p)| {
            (if p.1 < chunk[a].1 { i } else { a }, if p.1 > chunk[b].1 { i } else { b })
        });
        let (i, j) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push(chunk[i]);
        if j != i {
            out.push(chunk[j]);
        }
    }
    out
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    } else {
        let m = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - m, hi + m)
    }
}

impl Chart {
    fn data_range(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = xr;
        for s in &self.series {
            for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                xr = (xr.0.min(x), xr.1.max(x));
                yr = (yr.0.min(y), yr.1.max(y));
            }
        }
        for c in &self.circles {
            xr = (xr.0.min(c.cx - c.r), xr.1.max(c.cx + c.r));
            yr = (yr.0.min(c.cy - c.r), yr.1.max(c.cy + c.r));
        }
        if !xr.0.is_finite() {
            xr = (0.0, 1.0);
            yr = (0.0, 1.0);
        }
        (
            self.x_range.unwrap_or_else(|| pad(xr.0, xr.1)),
            self.y_range.unwrap_or_else(|| pad(yr.0, yr.1)),
        )
    }

    fn render(&self, out: &mut String, y0: f64) {
        let ((x_lo, x_hi), (y_lo, y_hi)) = self.data_range();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = PANEL_H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
        let sy = |y: f64| y0 + TOP + (y_hi - y) / (y_hi - y_lo) * ph;
        let inside = |x: f64, y: f64| x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;

        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##,
            y0 + TOP
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            y0 + TOP - 10.0,
            escape(&self.title)
        );
        for t in nice_ticks(x_lo, x_hi) {
            let x = sx(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"##,
                y0 + TOP,
                y0 + TOP + ph,
                y0 + TOP + ph + 15.0,
                tick_label(t)
            );
        }
        for t in nice_ticks(y_lo, y_hi) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
                LEFT + pw,
                LEFT - 5.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            LEFT + pw / 2.0,
            y0 + PANEL_H - 8.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="15" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {:.2})">{}</text>"#,
            y0 + TOP + ph / 2.0,
            y0 + TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for c in &self.circles {
            let _ = writeln!(
                out,
                r#"<ellipse cx="{:.2}" cy="{:.2}" rx="{:.2}" ry="{:.2}" fill="none" stroke="{}" stroke-dasharray="6 3"/>"#,
                sx(c.cx),
                sy(c.cy),
                c.r / (x_hi - x_lo) * pw,
                c.r / (y_hi - y_lo) * ph,
                c.color
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for &(x, y) in &decimate(&s.points) {
                if inside(x, y) {
                    runs.last_mut().expect("non-empty").push((sx(x), sy(y)));
                } else if !runs.last().expect("non-empty").is_empty() {
                    runs.push(Vec::new());
                }
            }
            for run in runs.iter().filter(|r| r.len() > 1) {
                out.push_str(r#"<polyline fill="none" stroke-width="1.2" stroke=""#);
                out.push_str(s.color);
                out.push_str(r#"" points=""#);
                for (x, y) in run {
                    let _ = write!(out, "{x:.2},{y:.2} ");
                }
                out.push_str("\"/>\n");
            }
            let ly = y0 + TOP + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{ly:.2}" text-anchor="end" font-size="11" fill="{}">{}</text>"#,
                LEFT + pw - 6.0,
                s.color,
                escape(&s.name)
            );
        }
    }
}

/// Render panels stacked vertically into one SVG document.
pub fn render_svg(charts: &[Chart]) -> String {
    let h = PANEL_H * charts.len().max(1) as f64;
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{h}" viewBox="0 0 {WIDTH} {h}" font-family="sans-serif">"#
    );
    out.push('\n');
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
    for (i, c) in charts.iter().enumerate() {
        c.render(&mut out, i as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.0, 450.0);
        assert_eq!(t.first(), Some(&0.0));
        assert_eq!(t.last(), Some(&400.0));
        assert!(nice_ticks(-3.0, 3.0).contains(&0.0));
        assert_eq!(tick_label(0.1 + 0.2), "0.3");
        assert_eq!(tick_label(150.0), "150");
        assert_eq!(tick_label(-2.5), "-2.5");
    }

    #[test]
    fn decimation_keeps_extremes() {
        let pts: Vec<(f64, f64)> = (0..100_000).map(|i| (i as f64, ((i * 7919) % 1000) as f64)).collect();
        let d = decimate(&pts);
        assert!(d.len() <= MAX_POINTS + 2);
        assert_eq!(d.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max), 999.0);
        assert_eq!(d.iter().map(|p| p.1).fold(f64::INFINITY, f64::min), 0.0);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let c = Chart {
            title: "a<b".into(),
            series: vec![Series { name: "s".into(), color: "red", points: vec![(0.0, 0.0), (1.0, 1.0)] }],
            circles: vec![Circle { cx: 0.5, cy: 0.5, r: 0.1, color: "blue" }],
            ..Default::default()
        };
        let s = render_svg(&[c.clone(), c]);
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("a&lt;b"));
    }
}

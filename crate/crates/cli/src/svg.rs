//! Minimal SVG line plots.

use std::fmt::Write as _;

const W: f64 = 480.0;
const H: f64 = 480.0;
const MARGIN: f64 = 30.0;
const COLOURS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One panel of polylines.
pub struct Panel {
    pub title: String,
    pub lines: Vec<Vec<(f64, f64)>>,
    /// Equal scaling of both axes.
    pub equal: bool,
}

fn bounds(p: &Panel) -> Option<(f64, f64, f64, f64)> {
    let pts = p
        .lines
        .iter()
        .flatten()
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        return None;
    }
    let mut dx = (x1 - x0).max(1e-12);
    let mut dy = (y1 - y0).max(1e-12);
    if p.equal {
        let d = dx.max(dy);
        x0 -= 0.5 * (d - dx);
        y0 -= 0.5 * (d - dy);
        dx = d;
        dy = d;
    }
    Some((x0, dx, y0, dy))
}

/// Panels side by side.
pub fn render(panels: &[Panel]) -> String {
    let mut s = String::new();
    let total = W * panels.len() as f64;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{H}" viewBox="0 0 {total} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{total}" height="{H}" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        let ox = W * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="18" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            ox + W / 2.0,
            escape(&p.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="gray"/>"#,
            ox + MARGIN,
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        let Some((x0, dx, y0, dy)) = bounds(p) else {
            continue;
        };
        let span = W - 2.0 * MARGIN;
        for (i, line) in p.lines.iter().enumerate() {
            let pts: Vec<String> = line
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| {
                    let px = ox + MARGIN + span * (x - x0) / dx;
                    let py = H - MARGIN - span * (y - y0) / dy;
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
                COLOURS[i % COLOURS.len()],
                pts.join(" ")
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Paths of each vortex from a list of flat configurations.
pub fn traces(states: &[Vec<f64>]) -> Vec<Vec<(f64, f64)>> {
    let n = states.first().map_or(0, |s| s.len() / 2);
    (0..n)
        .map(|k| states.iter().map(|z| (z[2 * k], z[2 * k + 1])).collect())
        .collect()
}

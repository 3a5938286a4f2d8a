//! Top-down SVG plots of group trajectories.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::position::PositionGrid;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One polyline per dancer over the XZ plane (x to the right, z downward),
/// with the grid's cell boundaries drawn underneath when given. Start points
/// are circles, end points squares.
pub fn trajectory_svg(
    paths: &[Vec<[f64; 2]>],
    grid: Option<&PositionGrid>,
    width_px: u32,
) -> Result<String> {
    if paths.is_empty() || paths.iter().any(Vec::is_empty) {
        return Err(Error::invalid("nothing to plot"));
    }
    if paths.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("trajectory point".into()));
    }
    let pts = || paths.iter().flatten();
    let margin = 0.5;
    let x0 = pts().map(|p| p[0]).fold(f64::INFINITY, f64::min) - margin;
    let x1 = pts().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) + margin;
    let z0 = pts().map(|p| p[1]).fold(f64::INFINITY, f64::min) - margin;
    let z1 = pts().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max) + margin;
    let scale = f64::from(width_px.max(1)) / (x1 - x0);
    let height = ((z1 - z0) * scale).ceil() as u32;
    let sx = |x: f64| (x - x0) * scale;
    let sz = |z: f64| (z - z0) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height}" viewBox="0 0 {width_px} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(g) = grid {
        let (min, _) = g.extent();
        let c = g.cell_size();
        let first = |lo: f64| ((lo - min) / c).ceil() as i64;
        let last = |hi: f64| ((hi - min) / c).floor() as i64;
        let _ = writeln!(s, r##"<g stroke="#dddddd" stroke-width="1">"##);
        for i in first(x0).max(0)..=last(x1).min(i64::from(g.side())) {
            let x = sx(min + i as f64 * c);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="0" x2="{x:.2}" y2="{height}"/>"#);
        }
        for i in first(z0).max(0)..=last(z1).min(i64::from(g.side())) {
            let z = sz(min + i as f64 * c);
            let _ = writeln!(
                s,
                r#"<line x1="0" y1="{z:.2}" x2="{width_px}" y2="{z:.2}"/>"#
            );
        }
        let _ = writeln!(s, "</g>");
    }
    for (i, path) in paths.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = path
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p[0]), sz(p[1])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let (a, b) = (path[0], path[path.len() - 1]);
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{color}"/>"#,
            sx(a[0]),
            sz(a[1])
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="9" height="9" fill="{color}"/>"#,
            sx(b[0]) - 4.5,
            sz(b[1]) - 4.5
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

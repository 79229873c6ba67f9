//! SVG view of one run projected onto two coordinate axes.

use std::fmt::Write as _;

use thiserror::Error;

use super::RunRecord;
use crate::measure::convex_hull_2d;
use crate::oracles::{RegionShape, RegionSpec};

const MARGIN: f64 = 20.0;
const SIDE: f64 = 400.0;
const ELLIPSE_SEGMENTS: usize = 96;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("projection axes ({0}, {1}) must be distinct and below d = {2}")]
    InvalidAxes(usize, usize, usize),
}

/// Maps unit-domain coordinates to the viewport; y grows upward.
fn to_view(x: f64, y: f64) -> (f64, f64) {
    (MARGIN + x * SIDE, MARGIN + (1.0 - y) * SIDE)
}

fn points_attr(pts: &[[f64; 2]]) -> String {
    pts.iter()
        .map(|p| {
            let (x, y) = to_view(p[0], p[1]);
            format!("{x:.3},{y:.3}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Unit-circle or unit-square outline in the region's local frame.
fn local_outline(shape: RegionShape) -> Vec<[f64; 2]> {
    match shape {
        RegionShape::Rectangle => vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        RegionShape::Ellipse => (0..ELLIPSE_SEGMENTS)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / ELLIPSE_SEGMENTS as f64;
                [t.cos(), t.sin()]
            })
            .collect(),
    }
}

/// Outline of the region projected onto `(a, b)`. Exact when both axes are
/// the rotation plane or neither is; otherwise the projected bounding box.
fn region_outline(spec: &RegionSpec, a: usize, b: usize) -> Vec<[f64; 2]> {
    let c = spec.center.coords();
    let h = &spec.half_extents;
    let rotated = spec.gamma_deg != 0.0 && spec.plane.is_some();
    let in_plane = |axis: usize| spec.plane.is_some_and(|(p, q)| axis == p || axis == q);

    if rotated && in_plane(a) && in_plane(b) {
        let (p, q) = spec.plane.expect("checked");
        let (sin, cos) = spec.gamma_deg.to_radians().sin_cos();
        return local_outline(spec.shape)
            .into_iter()
            .map(|[s, t]| {
                let (u, v) = (s * h[p], t * h[q]);
                let world_p = c[p] + cos * u - sin * v;
                let world_q = c[q] + sin * u + cos * v;
                if a == p {
                    [world_p, world_q]
                } else {
                    [world_q, world_p]
                }
            })
            .collect();
    }
    let (ha, hb, shape) = if rotated && (in_plane(a) || in_plane(b)) {
        let hw = spec.bounding_half_widths();
        (hw[a], hw[b], RegionShape::Rectangle)
    } else {
        (h[a], h[b], spec.shape)
    };
    local_outline(shape)
        .into_iter()
        .map(|[s, t]| [c[a] + s * ha, c[b] + t * hb])
        .collect()
}

/// Renders `record` projected onto axes `(a, b)` (0-based): the domain
/// square, the real region's outline, the hull of the projected points,
/// one dot per boundary input and one marker for the source.
pub fn render_svg(record: &RunRecord, axes: (usize, usize)) -> Result<String, RenderError> {
    let d = record.setting.d;
    let (a, b) = axes;
    if a == b || a >= d || b >= d {
        return Err(RenderError::InvalidAxes(a, b, d));
    }
    let project = |p: &crate::geometry::Point| [p.coords()[a], p.coords()[b]];
    let size = 2.0 * MARGIN + SIDE;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0}" height="{size:.0}" viewBox="0 0 {size:.0} {size:.0}">"#
    );
    let _ = writeln!(
        svg,
        "<title>{} rep {} (x{} vs x{})</title>",
        record.setting_id,
        record.rep,
        a + 1,
        b + 1
    );
    let _ = writeln!(
        svg,
        r##"<rect class="domain" x="{MARGIN:.3}" y="{MARGIN:.3}" width="{SIDE:.3}" height="{SIDE:.3}" fill="none" stroke="#000000"/>"##
    );
    if let Some(spec) = &record.region {
        let _ = writeln!(
            svg,
            r##"<polygon class="region" points="{}" fill="#f4cccc" stroke="#cc0000"/>"##,
            points_attr(&region_outline(spec, a, b))
        );
    }

    let projected: Vec<[f64; 2]> = record.afr_points().iter().map(project).collect();
    let hull = convex_hull_2d(&projected);
    if hull.len() >= 2 {
        let _ = writeln!(
            svg,
            r##"<polygon class="hull" points="{}" fill="none" stroke="#0055cc"/>"##,
            points_attr(&hull)
        );
    }
    for p in &record.boundary_inputs {
        let [x, y] = project(p);
        let (vx, vy) = to_view(x, y);
        let _ = writeln!(
            svg,
            r##"<circle class="boundary" cx="{vx:.3}" cy="{vy:.3}" r="1.500" fill="#0055cc"/>"##
        );
    }
    if let Some(src) = record.source_inputs.first().or(record.first_failure.as_ref()) {
        let [x, y] = project(src);
        let (vx, vy) = to_view(x, y);
        let _ = writeln!(
            svg,
            r##"<rect class="source" x="{:.3}" y="{:.3}" width="6.000" height="6.000" fill="#009900"/>"##,
            vx - 3.0,
            vy - 3.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

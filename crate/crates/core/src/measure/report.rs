//! The approximate failure region written out as linear inequalities.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::hull::convex_hull_2d;
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBound {
    pub axis: usize,
    pub lower: f64,
    pub upper: f64,
}

/// `normal · (x, y) <= offset`, with a unit-length normal pointing out of
/// the hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn slack(&self, p: [f64; 2]) -> f64 {
        self.offset - (self.normal[0] * p[0] + self.normal[1] * p[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityReport {
    /// Per-axis `min <= x_i <= max`.
    Bounds(Vec<AxisBound>),
    /// One inequality per hull edge (2-D only).
    HalfPlanes(Vec<HalfPlane>),
}

fn axis_name(axis: usize, d: usize) -> String {
    match (d, axis) {
        (..=3, 0) => "x".into(),
        (..=3, 1) => "y".into(),
        (..=3, 2) => "z".into(),
        _ => format!("x{}", axis + 1),
    }
}

/// Axis-aligned bounding-box description, valid in any dimension.
pub fn bounds_report(points: &[Point]) -> InequalityReport {
    let d = points.first().map_or(0, Point::dim);
    let bounds = (0..d)
        .map(|axis| {
            let (lower, upper) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), p| {
                (l.min(p.coords()[axis]), u.max(p.coords()[axis]))
            });
            AxisBound { axis, lower, upper }
        })
        .collect();
    InequalityReport::Bounds(bounds)
}

/// Hull-edge description for 2-D point sets. Sets whose hull has fewer
/// than three vertices fall back to the bounds form.
pub fn half_plane_report(points: &[Point]) -> InequalityReport {
    if points.iter().any(|p| p.dim() != 2) {
        return bounds_report(points);
    }
    let flat: Vec<[f64; 2]> = points.iter().map(|p| [p.coords()[0], p.coords()[1]]).collect();
    let hull = convex_hull_2d(&flat);
    if hull.len() < 3 {
        return bounds_report(points);
    }
    let planes = (0..hull.len())
        .map(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            // counter-clockwise order: the outward normal is the edge turned clockwise
            let (nx, ny) = (b[1] - a[1], a[0] - b[0]);
            let len = nx.hypot(ny);
            let normal = [nx / len, ny / len];
            HalfPlane {
                normal,
                offset: normal[0] * a[0] + normal[1] * a[1],
            }
        })
        .collect();
    InequalityReport::HalfPlanes(planes)
}

/// Half-planes for d = 2, bounds otherwise.
pub fn inequality_report(points: &[Point]) -> InequalityReport {
    match points.first().map(Point::dim) {
        Some(2) => half_plane_report(points),
        _ => bounds_report(points),
    }
}

impl fmt::Display for InequalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match self {
            InequalityReport::Bounds(bounds) => bounds
                .iter()
                .map(|b| {
                    let name = axis_name(b.axis, bounds.len());
                    if b.lower == b.upper {
                        format!("{name} = {:.6}", b.lower)
                    } else {
                        format!("{:.6} ≤ {name} ≤ {:.6}", b.lower, b.upper)
                    }
                })
                .collect(),
            InequalityReport::HalfPlanes(planes) => planes
                .iter()
                .map(|h| {
                    let sign = if h.normal[1] < 0.0 { '-' } else { '+' };
                    format!(
                        "{:.6}·x {sign} {:.6}·y ≤ {:.6}",
                        h.normal[0],
                        h.normal[1].abs(),
                        h.offset
                    )
                })
                .collect(),
        };
        f.write_str(&parts.join("; "))
    }
}

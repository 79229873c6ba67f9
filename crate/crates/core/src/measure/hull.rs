//! Convex hulls and their volumes: exact for d ≤ 2, Monte-Carlo above.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lp::{CachedMembership, VertexSet};
use crate::geometry::Point;

/// Certificates kept per kind by the Monte-Carlo membership cache.
const CERTIFICATE_CACHE: usize = 48;
/// Approximate number of grid cells used to order Monte-Carlo samples.
const SORT_CELLS: f64 = 65536.0;

/// Monotone-chain hull, counter-clockwise from the lexicographically
/// smallest point. Collinear points are dropped; degenerate inputs give a
/// segment or a single point.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        // the last point of each chain starts the other one
        hull.pop();
    }
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    hull
}

/// Shoelace area of a simple polygon (absolute value).
pub fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    twice.abs() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    Exact1d,
    Exact2d,
    MonteCarlo,
}

impl VolumeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            VolumeMethod::Exact1d => "exact-1d",
            VolumeMethod::Exact2d => "exact-2d",
            VolumeMethod::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullVolume {
    pub volume: f64,
    /// Standard error of `volume`; 0 for exact methods.
    pub stderr: f64,
    pub method: VolumeMethod,
    /// Too few distinct points for a full-dimensional hull.
    pub degenerate: bool,
}

fn distinct(points: &[Point]) -> Vec<&Point> {
    let mut out: Vec<&Point> = Vec::with_capacity(points.len());
    let mut sorted: Vec<&Point> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.coords()
            .iter()
            .zip(b.coords())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for p in sorted {
        if out.last().is_none_or(|q| *q != p) {
            out.push(p);
        }
    }
    out
}

/// Volume of the convex hull of `points` in `d` dimensions.
pub fn hull_volume<R: Rng + ?Sized>(
    points: &[Point],
    d: usize,
    mc_samples: usize,
    rng: &mut R,
) -> HullVolume {
    let method = match d {
        1 => VolumeMethod::Exact1d,
        2 => VolumeMethod::Exact2d,
        _ => VolumeMethod::MonteCarlo,
    };
    let unique = distinct(points);
    if unique.len() < d + 1 {
        return HullVolume {
            volume: 0.0,
            stderr: 0.0,
            method,
            degenerate: true,
        };
    }
    match d {
        1 => {
            let (lo, hi) = unique.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.coords()[0]), hi.max(p.coords()[0]))
            });
            exact(hi - lo, method)
        }
        2 => {
            let flat: Vec<[f64; 2]> = unique.iter().map(|p| [p.coords()[0], p.coords()[1]]).collect();
            exact(polygon_area(&convex_hull_2d(&flat)), method)
        }
        _ => monte_carlo_hull_volume(points, mc_samples, rng),
    }
}

fn exact(volume: f64, method: VolumeMethod) -> HullVolume {
    HullVolume {
        volume,
        stderr: 0.0,
        method,
        degenerate: volume <= 0.0,
    }
}

/// True iff `q` is a convex combination of `vertices`.
pub fn point_in_hull(q: &Point, vertices: &[Point]) -> bool {
    let vs = VertexSet::new(q.dim(), vertices.iter().map(|v| v.coords()));
    vs.membership(q.coords()).is_inside()
}

/// Monte-Carlo hull volume in any dimension: uniform samples in the
/// bounding box, membership decided by linear programming.
pub fn monte_carlo_hull_volume<R: Rng + ?Sized>(
    points: &[Point],
    mc_samples: usize,
    rng: &mut R,
) -> HullVolume {
    let degenerate = HullVolume {
        volume: 0.0,
        stderr: 0.0,
        method: VolumeMethod::MonteCarlo,
        degenerate: true,
    };
    let Some(first) = points.first() else {
        return degenerate;
    };
    let d = first.dim();
    let unique = distinct(points);
    if unique.len() < d + 1 {
        return degenerate;
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in &unique {
        for (i, &c) in p.coords().iter().enumerate() {
            lo[i] = lo[i].min(c);
            hi[i] = hi[i].max(c);
        }
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    if box_volume <= 0.0 {
        return degenerate;
    }
    let samples = mc_samples.max(1);
    let mut coords = Vec::with_capacity(samples * d);
    for _ in 0..samples {
        for i in 0..d {
            coords.push(lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
        }
    }

    // Visit samples cell by cell so consecutive queries reuse certificates.
    let cells = SORT_CELLS.powf(1.0 / d as f64).floor().max(2.0);
    let cell_key = |s: &[f64]| -> u64 {
        s.iter().enumerate().fold(0u64, |key, (i, &c)| {
            let k = (((c - lo[i]) / (hi[i] - lo[i])) * cells).floor().clamp(0.0, cells - 1.0);
            key * cells as u64 + k as u64
        })
    };
    let mut order: Vec<(u64, usize)> = (0..samples)
        .map(|j| (cell_key(&coords[j * d..(j + 1) * d]), j))
        .collect();
    order.sort_unstable();

    let vertices = VertexSet::new(d, unique.iter().map(|p| p.coords()));
    let mut membership = CachedMembership::new(&vertices, CERTIFICATE_CACHE);
    let inside = order
        .iter()
        .filter(|(_, j)| membership.contains(&coords[j * d..(j + 1) * d]))
        .count();

    let p = inside as f64 / samples as f64;
    let volume = p * box_volume;
    HullVolume {
        volume,
        stderr: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
        method: VolumeMethod::MonteCarlo,
        degenerate: volume <= 0.0,
    }
}

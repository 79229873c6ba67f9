//! Quantifying the approximate failure region: hulls, volumes, the size
//! ratio against the real region, and inequality descriptions.

mod hull;
mod lp;
mod report;

pub use hull::{
    convex_hull_2d, hull_volume, monte_carlo_hull_volume, point_in_hull, polygon_area,
    HullVolume, VolumeMethod,
};
pub use lp::{
    CachedMembership, Membership, SeparatingPlane, SimplexCertificate, VertexSet,
    FEASIBILITY_TOLERANCE,
};
pub use report::{
    bounds_report, half_plane_report, inequality_report, AxisBound, HalfPlane, InequalityReport,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{InputDomain, Point};
use crate::oracles::RegionSpec;
use crate::search::BoundaryHarvest;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMeasure {
    /// Hull volume of the harvested points.
    pub s_afr: f64,
    /// Volume of the real failure region.
    pub s_rfr: f64,
    pub s_ratio: f64,
    pub stderr: f64,
    pub method: VolumeMethod,
    pub degenerate: bool,
}

impl RegionMeasure {
    pub fn new(volume: HullVolume, s_rfr: f64) -> Self {
        let s_ratio = if volume.degenerate || s_rfr <= 0.0 {
            0.0
        } else {
            volume.volume / s_rfr
        };
        RegionMeasure {
            s_afr: volume.volume,
            s_rfr,
            s_ratio,
            stderr: volume.stderr,
            method: volume.method,
            degenerate: volume.degenerate,
        }
    }
}

/// The point set whose hull approximates the failure region: boundary
/// inputs followed by the source inputs.
pub fn afr_points(harvest: &BoundaryHarvest) -> Vec<Point> {
    harvest
        .boundary_inputs
        .iter()
        .chain(&harvest.source_inputs)
        .cloned()
        .collect()
}

pub fn measure_points<R: Rng + ?Sized>(
    points: &[Point],
    spec: &RegionSpec,
    domain: &InputDomain,
    mc_samples: usize,
    rng: &mut R,
) -> RegionMeasure {
    let volume = hull_volume(points, domain.dim(), mc_samples, rng);
    RegionMeasure::new(volume, spec.theta * domain.volume())
}

pub fn measure_run<R: Rng + ?Sized>(
    harvest: &BoundaryHarvest,
    spec: &RegionSpec,
    domain: &InputDomain,
    mc_samples: usize,
    rng: &mut R,
) -> RegionMeasure {
    measure_points(&afr_points(harvest), spec, domain, mc_samples, rng)
}

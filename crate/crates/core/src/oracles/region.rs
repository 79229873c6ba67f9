//! Simulated failure regions: rotated hyperrectangles and hyperellipsoids
//! placed inside the input domain.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Oracle, OracleError, OracleStats, Verdict};
use crate::geometry::{rotate_in_plane, InputDomain, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionShape {
    Rectangle,
    Ellipse,
}

impl RegionShape {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionShape::Rectangle => "rectangle",
            RegionShape::Ellipse => "ellipse",
        }
    }
}

impl std::str::FromStr for RegionShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rectangle" | "rect" | "cuboid" | "hypercube" | "box" => Ok(RegionShape::Rectangle),
            "ellipse" | "ellipsoid" | "hyperellipsoid" => Ok(RegionShape::Ellipse),
            other => Err(format!("unknown shape `{other}`")),
        }
    }
}

impl std::fmt::Display for RegionShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Per-axis half-lengths of a region with failure rate `theta` and
/// compactness `delta` (extent ratio `1 : delta : ... : delta`, first axis
/// shortest).
pub fn derive_extents(
    shape: RegionShape,
    theta: f64,
    delta: f64,
    domain: &InputDomain,
) -> Result<Vec<f64>, OracleError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(OracleError::InvalidParameter(format!(
            "failure rate {theta} outside (0, 1]"
        )));
    }
    if !(delta >= 1.0 && delta.is_finite()) {
        return Err(OracleError::InvalidParameter(format!(
            "compactness {delta} must be >= 1"
        )));
    }
    let d = domain.dim();
    let target = theta * domain.volume();
    let stretch = delta.powi(d as i32 - 1);
    let half: Vec<f64> = match shape {
        RegionShape::Rectangle => {
            let a = (target / stretch).powf(1.0 / d as f64);
            (0..d)
                .map(|i| if i == 0 { a / 2.0 } else { a * delta / 2.0 })
                .collect()
        }
        RegionShape::Ellipse => {
            let r = (target / (unit_ball_volume(d) * stretch)).powf(1.0 / d as f64);
            (0..d).map(|i| if i == 0 { r } else { r * delta }).collect()
        }
    };
    for (axis, h) in half.iter().enumerate() {
        let edge = domain.edge(axis);
        if 2.0 * h > edge * (1.0 + 1e-12) {
            return Err(OracleError::Infeasible(format!(
                "{shape} extent {} along axis {} exceeds domain edge {edge} \
                 (theta={theta}, delta={delta}, d={d})",
                2.0 * h,
                axis + 1
            )));
        }
    }
    Ok(half)
}

/// Region parameters before a center is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTemplate {
    pub shape: RegionShape,
    pub theta: f64,
    pub delta: f64,
    pub gamma_deg: f64,
}

/// A placed ground-truth failure region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub shape: RegionShape,
    pub theta: f64,
    pub delta: f64,
    pub gamma_deg: f64,
    pub center: Point,
    pub half_extents: Vec<f64>,
    /// 0-based axes of the rotation plane; `None` in one dimension.
    pub plane: Option<(usize, usize)>,
}

/// The single rotation plane used for every dimension: axes 1 and 2.
pub fn default_plane(d: usize) -> Option<(usize, usize)> {
    (d >= 2).then_some((0, 1))
}

impl RegionSpec {
    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn volume(&self) -> f64 {
        let prod: f64 = self.half_extents.iter().product();
        match self.shape {
            RegionShape::Rectangle => prod * 2f64.powi(self.dim() as i32),
            RegionShape::Ellipse => prod * unit_ball_volume(self.dim()),
        }
    }

    /// Half-widths of the axis-aligned bounding box of the rotated region.
    pub fn bounding_half_widths(&self) -> Vec<f64> {
        let mut hw = self.half_extents.clone();
        if let Some((i, j)) = self.plane {
            let (sin, cos) = self.gamma_deg.to_radians().sin_cos();
            let (ei, ej) = (self.half_extents[i], self.half_extents[j]);
            match self.shape {
                RegionShape::Rectangle => {
                    hw[i] = cos.abs() * ei + sin.abs() * ej;
                    hw[j] = sin.abs() * ei + cos.abs() * ej;
                }
                RegionShape::Ellipse => {
                    hw[i] = (ei * cos).hypot(ej * sin);
                    hw[j] = (ei * sin).hypot(ej * cos);
                }
            }
        }
        hw
    }

    /// Maps a point into the region's unrotated frame.
    pub fn to_local(&self, p: &Point) -> Point {
        match self.plane {
            Some(plane) if self.gamma_deg != 0.0 => {
                rotate_in_plane(p, &self.center, -self.gamma_deg, plane)
                    .expect("plane validated at construction")
            }
            _ => p.clone(),
        }
    }

    /// Closed membership test: boundary points are inside.
    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim() {
            return false;
        }
        let q = self.to_local(p);
        let c = self.center.coords();
        let offsets = q.coords().iter().zip(c).map(|(x, c)| x - c);
        match self.shape {
            RegionShape::Rectangle => offsets
                .zip(&self.half_extents)
                .all(|(o, e)| o.abs() <= *e),
            RegionShape::Ellipse => {
                offsets
                    .zip(&self.half_extents)
                    .map(|(o, e)| (o / e) * (o / e))
                    .sum::<f64>()
                    <= 1.0
            }
        }
    }

    /// Distance from `origin` (inside the region) to the region boundary
    /// along `direction`, computed analytically in the local frame.
    pub fn exit_distance(&self, origin: &Point, direction: &[f64]) -> f64 {
        let q = self.to_local(origin);
        let dir = match self.plane {
            Some(plane) if self.gamma_deg != 0.0 => {
                let zero = Point::new(vec![0.0; self.dim()]).expect("finite");
                let tip = Point::new(direction.to_vec()).expect("finite direction");
                rotate_in_plane(&tip, &zero, -self.gamma_deg, plane)
                    .expect("plane validated")
                    .into_coords()
            }
            _ => direction.to_vec(),
        };
        let rel: Vec<f64> = q
            .coords()
            .iter()
            .zip(self.center.coords())
            .map(|(x, c)| x - c)
            .collect();
        match self.shape {
            RegionShape::Rectangle => rel
                .iter()
                .zip(&dir)
                .zip(&self.half_extents)
                .filter(|((_, u), _)| **u != 0.0)
                .map(|((o, u), e)| if *u > 0.0 { (e - o) / u } else { (-e - o) / u })
                .fold(f64::INFINITY, f64::min),
            RegionShape::Ellipse => {
                // solve sum(((o + t u) / e)^2) = 1 for the positive root
                let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
                for ((o, u), e) in rel.iter().zip(&dir).zip(&self.half_extents) {
                    a += (u / e) * (u / e);
                    b += 2.0 * o * u / (e * e);
                    c += (o / e) * (o / e);
                }
                (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)
            }
        }
    }
}

/// Places a region uniformly at random among the centers whose rotated
/// bounding box fits entirely inside the domain.
pub fn place_region<R: Rng + ?Sized>(
    template: &RegionTemplate,
    domain: &InputDomain,
    rng: &mut R,
) -> Result<RegionSpec, OracleError> {
    if !template.gamma_deg.is_finite() {
        return Err(OracleError::InvalidParameter(format!(
            "rotation {} is not finite",
            template.gamma_deg
        )));
    }
    let half_extents = derive_extents(template.shape, template.theta, template.delta, domain)?;
    let d = domain.dim();
    let mut spec = RegionSpec {
        shape: template.shape,
        theta: template.theta,
        delta: template.delta,
        gamma_deg: template.gamma_deg,
        center: domain.center(),
        half_extents,
        plane: default_plane(d),
    };
    let hw = spec.bounding_half_widths();
    let mut center = Vec::with_capacity(d);
    for (axis, h) in hw.iter().enumerate() {
        let lo = domain.lower().coords()[axis];
        let slack = domain.edge(axis) - 2.0 * h;
        if slack < -1e-12 * domain.edge(axis) {
            return Err(OracleError::Infeasible(format!(
                "rotated {} needs {} along axis {} but the domain edge is {}",
                spec.shape,
                2.0 * h,
                axis + 1,
                domain.edge(axis)
            )));
        }
        let slack = slack.max(0.0);
        center.push(lo + h + slack * rng.random::<f64>());
    }
    spec.center = Point::new(center)?;
    Ok(spec)
}

/// Oracle backed by an analytic [`RegionSpec`].
#[derive(Debug, Clone)]
pub struct RegionOracle {
    spec: RegionSpec,
    stats: OracleStats,
}

impl RegionOracle {
    pub fn new(spec: RegionSpec) -> Self {
        RegionOracle {
            spec,
            stats: OracleStats::default(),
        }
    }

    pub fn spec(&self) -> &RegionSpec {
        &self.spec
    }
}

impl Oracle for RegionOracle {
    fn dimension(&self) -> usize {
        self.spec.dim()
    }

    fn verdict(&mut self, p: &Point) -> Result<Verdict, OracleError> {
        if p.dim() != self.spec.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.spec.dim(),
                found: p.dim(),
            });
        }
        let v = if self.spec.contains(p) {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        self.stats.record(v);
        Ok(v)
    }

    fn stats(&self) -> OracleStats {
        self.stats
    }
}

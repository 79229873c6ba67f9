//! Vector primitives shared by every search strategy: points, unit
//! orientations, the half-open input domain, orientation sets, orthant
//! mirroring and planar rotation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the Euclidean norm of an [`Orientation`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),
    #[error("dimension {0} has no orthant diagonals (need d >= 2)")]
    DegenerateDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coordinate {axis} is not finite")]
    NonFinite { axis: usize },
    #[error("component {axis} is negative ({value})")]
    NegativeComponent { axis: usize, value: f64 },
    #[error("vector norm {0} is not 1")]
    NotUnit(f64),
    #[error("cosine distance undefined for a zero vector")]
    ZeroVector,
    #[error("invalid rotation plane ({0}, {1}) for dimension {2}")]
    InvalidPlane(usize, usize, usize),
    #[error("invalid domain: axis {axis} has lower {lower} >= upper {upper}")]
    InvalidDomain { axis: usize, lower: f64, upper: f64 },
}

/// A position in the input domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::InvalidDimension(0));
        }
        if let Some(axis) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite { axis });
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// `self + t * direction`.
    pub fn along(&self, direction: &Orientation, t: f64) -> Point {
        debug_assert_eq!(self.dim(), direction.dim());
        Point(
            self.0
                .iter()
                .zip(direction.components())
                .map(|(x, a)| x + t * a)
                .collect(),
        )
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_squared(other).sqrt()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = GeometryError;

    fn try_from(coords: Vec<f64>) -> Result<Self, Self::Error> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl TryFrom<Vec<f64>> for Orientation {
    type Error = GeometryError;

    fn try_from(components: Vec<f64>) -> Result<Self, Self::Error> {
        Orientation::from_unit(components)
    }
}

impl From<Orientation> for Vec<f64> {
    fn from(o: Orientation) -> Self {
        o.0
    }
}

/// A unit direction vector used to extend from a source input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Orientation(Vec<f64>);

impl Orientation {
    /// Wraps components that already have unit norm.
    pub fn from_unit(components: Vec<f64>) -> Result<Self, GeometryError> {
        if components.is_empty() {
            return Err(GeometryError::InvalidDimension(0));
        }
        if let Some(axis) = components.iter().position(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite { axis });
        }
        let norm = norm(&components);
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(GeometryError::NotUnit(norm));
        }
        Ok(Orientation(components))
    }

    /// Scales an arbitrary non-zero vector to unit length.
    pub fn normalized(components: Vec<f64>) -> Result<Self, GeometryError> {
        if components.is_empty() {
            return Err(GeometryError::InvalidDimension(0));
        }
        let n = norm(&components);
        if !n.is_finite() {
            return Err(GeometryError::NonFinite { axis: 0 });
        }
        if n == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Orientation(components.into_iter().map(|c| c / n).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn negated(&self) -> Orientation {
        Orientation(self.0.iter().map(|c| -c).collect())
    }

    /// Draws a direction uniformly from the part of the unit sphere where
    /// every component is non-negative.
    pub fn random_first_orthant<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Orientation {
        assert!(d >= 1, "dimension must be at least 1");
        loop {
            let v: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal).abs())
                .collect();
            let n = norm(&v);
            if n > 1e-12 {
                return Orientation(v.into_iter().map(|c| c / n).collect());
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Axis-aligned input domain with half-open bounds `[lower_i, upper_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDomain {
    lower: Point,
    upper: Point,
}

impl InputDomain {
    pub fn new(lower: Point, upper: Point) -> Result<Self, GeometryError> {
        if lower.dim() != upper.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.dim(),
                found: upper.dim(),
            });
        }
        for (axis, (&lo, &hi)) in lower.coords().iter().zip(upper.coords()).enumerate() {
            if lo >= hi {
                return Err(GeometryError::InvalidDomain {
                    axis,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(InputDomain { lower, upper })
    }

    /// The unit hypercube `[0, 1)^d`.
    pub fn unit(d: usize) -> Result<Self, GeometryError> {
        if d == 0 {
            return Err(GeometryError::InvalidDimension(0));
        }
        InputDomain::new(Point(vec![0.0; d]), Point(vec![1.0; d]))
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn edge(&self, axis: usize) -> f64 {
        self.upper.0[axis] - self.lower.0[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.edge(i)).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lower.distance(&self.upper)
    }

    pub fn center(&self) -> Point {
        Point(
            self.lower
                .0
                .iter()
                .zip(&self.upper.0)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
        )
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p
                .0
                .iter()
                .zip(self.lower.0.iter().zip(&self.upper.0))
                .all(|(x, (lo, hi))| lo <= x && x < hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point(
            self.lower
                .0
                .iter()
                .zip(&self.upper.0)
                .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        )
    }
}

/// The `2d` signed axis directions, ordered `+e_1, -e_1, +e_2, -e_2, ...`.
pub fn axis_orientations(d: usize) -> Result<Vec<Orientation>, GeometryError> {
    if d == 0 {
        return Err(GeometryError::InvalidDimension(d));
    }
    let mut out = Vec::with_capacity(2 * d);
    for axis in 0..d {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[axis] = sign;
            out.push(Orientation(v));
        }
    }
    Ok(out)
}

/// The `2^d` equal-angle orthant diagonals `(±1/√d, ..., ±1/√d)`.
///
/// Sign patterns are enumerated by binary counting: bit `i` of the pattern
/// index set means axis `i` is negative, so pattern 0 is the all-positive
/// diagonal.
pub fn orthant_diagonal_orientations(d: usize) -> Result<Vec<Orientation>, GeometryError> {
    if d == 0 {
        return Err(GeometryError::InvalidDimension(d));
    }
    if d < 2 {
        return Err(GeometryError::DegenerateDimension(d));
    }
    let c = 1.0 / (d as f64).sqrt();
    Ok(sign_patterns(d)
        .map(|signs| Orientation(signs.iter().map(|s| s * c).collect()))
        .collect())
}

/// Axis directions followed by orthant diagonals: `2d + 2^d` orientations.
pub fn fsb2_orientations(d: usize) -> Result<Vec<Orientation>, GeometryError> {
    let mut all = axis_orientations(d)?;
    all.extend(orthant_diagonal_orientations(d)?);
    Ok(all)
}

fn sign_patterns(d: usize) -> impl Iterator<Item = Vec<f64>> {
    (0u64..(1u64 << d)).map(move |pattern| {
        (0..d)
            .map(|i| if pattern >> i & 1 == 1 { -1.0 } else { 1.0 })
            .collect()
    })
}

/// Maps a first-orthant direction into every orthant by sign flips.
///
/// Patterns follow the same binary order as
/// [`orthant_diagonal_orientations`]. When a component is exactly zero two
/// patterns produce the same vector; only the first occurrence is kept, so a
/// vector with `z` zero components yields `2^(d-z)` orientations.
pub fn mirror_to_orthants(v: &Orientation) -> Result<Vec<Orientation>, GeometryError> {
    for (axis, &c) in v.0.iter().enumerate() {
        if c < 0.0 {
            return Err(GeometryError::NegativeComponent { axis, value: c });
        }
    }
    let mut out: Vec<Orientation> = Vec::with_capacity(1 << v.dim());
    for signs in sign_patterns(v.dim()) {
        let mirrored: Vec<f64> = v
            .0
            .iter()
            .zip(&signs)
            .map(|(c, s)| if *c == 0.0 { 0.0 } else { c * s })
            .collect();
        if !out.iter().any(|o| o.0 == mirrored) {
            out.push(Orientation(mirrored));
        }
    }
    Ok(out)
}

/// `1 - u·v / (|u||v|)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, GeometryError> {
    if u.len() != v.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// Rotates `p` about `center` by `gamma_deg` degrees inside the coordinate
/// plane spanned by the (0-based) axes `plane.0 -> plane.1`. Other
/// coordinates are left untouched.
pub fn rotate_in_plane(
    p: &Point,
    center: &Point,
    gamma_deg: f64,
    plane: (usize, usize),
) -> Result<Point, GeometryError> {
    let d = p.dim();
    if center.dim() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            found: center.dim(),
        });
    }
    let (i, j) = plane;
    if i == j || i >= d || j >= d {
        return Err(GeometryError::InvalidPlane(i, j, d));
    }
    let (sin, cos) = gamma_deg.to_radians().sin_cos();
    let mut out = p.0.clone();
    let (x, y) = (p.0[i] - center.0[i], p.0[j] - center.0[j]);
    out[i] = center.0[i] + cos * x - sin * y;
    out[j] = center.0[j] + sin * x + cos * y;
    Ok(Point(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn axis_orientations_2d_order() {
        let got: Vec<Vec<f64>> = axis_orientations(2)
            .unwrap()
            .into_iter()
            .map(|o| o.0)
            .collect();
        assert_eq!(
            got,
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0]
            ]
        );
    }

    #[test]
    fn axis_orientations_small_dimensions() {
        let one: Vec<Vec<f64>> = axis_orientations(1).unwrap().into_iter().map(|o| o.0).collect();
        assert_eq!(one, vec![vec![1.0], vec![-1.0]]);
        let three = axis_orientations(3).unwrap();
        assert_eq!(three.len(), 6);
        for o in &three {
            assert_eq!(o.0.iter().filter(|c| c.abs() == 1.0).count(), 1);
            assert_eq!(o.0.iter().filter(|c| **c == 0.0).count(), 2);
        }
        assert_eq!(axis_orientations(0), Err(GeometryError::InvalidDimension(0)));
    }

    #[test]
    fn diagonals_2d_and_3d() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let got: Vec<Vec<f64>> = orthant_diagonal_orientations(2)
            .unwrap()
            .into_iter()
            .map(|o| o.0)
            .collect();
        let want = [[h, h], [-h, h], [h, -h], [-h, -h]];
        for (g, w) in got.iter().zip(want) {
            assert!((g[0] - w[0]).abs() < 1e-15 && (g[1] - w[1]).abs() < 1e-15);
        }
        let three = orthant_diagonal_orientations(3).unwrap();
        assert_eq!(three.len(), 8);
        let c = 1.0 / 3f64.sqrt();
        assert!(three.iter().all(|o| o.0.iter().all(|x| (x.abs() - c).abs() < 1e-15)));
        assert_eq!(fsb2_orientations(3).unwrap().len(), 14);
        assert_eq!(fsb2_orientations(2).unwrap().len(), 8);
        assert_eq!(
            orthant_diagonal_orientations(1),
            Err(GeometryError::DegenerateDimension(1))
        );
    }

    #[test]
    fn mirror_examples() {
        let v = Orientation::from_unit(vec![0.6, 0.8]).unwrap();
        let got: Vec<Vec<f64>> = mirror_to_orthants(&v).unwrap().into_iter().map(|o| o.0).collect();
        assert_eq!(
            got,
            vec![
                vec![0.6, 0.8],
                vec![-0.6, 0.8],
                vec![0.6, -0.8],
                vec![-0.6, -0.8]
            ]
        );

        let axis = Orientation::from_unit(vec![1.0, 0.0]).unwrap();
        let got: Vec<Vec<f64>> = mirror_to_orthants(&axis).unwrap().into_iter().map(|o| o.0).collect();
        assert_eq!(got, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let diag = Orientation::from_unit(vec![h, h]).unwrap();
        assert_eq!(mirror_to_orthants(&diag).unwrap().len(), 4);

        let bad = Orientation::from_unit(vec![-0.6, 0.8]).unwrap();
        assert!(matches!(
            mirror_to_orthants(&bad),
            Err(GeometryError::NegativeComponent { axis: 0, .. })
        ));
    }

    #[test]
    fn cosine_distance_examples() {
        assert!(cosine_distance(&[0.3, 0.4], &[0.3, 0.4]).unwrap().abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(GeometryError::ZeroVector)
        );
    }

    #[test]
    fn rotation_examples() {
        let r = rotate_in_plane(&pt(&[1.0, 0.0]), &pt(&[0.0, 0.0]), 90.0, (0, 1)).unwrap();
        assert!((r.0[0]).abs() < 1e-12 && (r.0[1] - 1.0).abs() < 1e-12);

        let p = pt(&[0.3, 0.7]);
        assert_eq!(rotate_in_plane(&p, &pt(&[0.5, 0.5]), 0.0, (0, 1)).unwrap(), p);

        let r = rotate_in_plane(&pt(&[0.6, 0.5]), &pt(&[0.5, 0.5]), 180.0, (0, 1)).unwrap();
        assert!((r.0[0] - 0.4).abs() < 1e-12 && (r.0[1] - 0.5).abs() < 1e-12);

        assert!(rotate_in_plane(&p, &p, 10.0, (1, 1)).is_err());
        assert!(rotate_in_plane(&p, &p, 10.0, (0, 2)).is_err());
    }

    #[test]
    fn domain_is_half_open() {
        let dom = InputDomain::unit(2).unwrap();
        assert!(dom.contains(&pt(&[0.0, 0.999])));
        assert!(!dom.contains(&pt(&[1.0, 0.5])));
        assert!(!dom.contains(&pt(&[-1e-18, 0.5])));
        assert!(InputDomain::new(pt(&[0.0]), pt(&[0.0])).is_err());
        assert_eq!(dom.volume(), 1.0);
    }

    #[test]
    fn random_first_orthant_is_unit_and_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=5 {
            for _ in 0..200 {
                let o = Orientation::random_first_orthant(d, &mut rng);
                assert!(o.0.iter().all(|c| *c >= 0.0));
                assert!((norm(&o.0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn point_rejects_non_finite() {
        assert!(matches!(
            Point::new(vec![0.0, f64::NAN]),
            Err(GeometryError::NonFinite { axis: 1 })
        ));
        assert!(serde_json::from_str::<Point>("[]").is_err());
    }
}

//! Convex-hull membership as a linear feasibility problem.
//!
//! `q` lies in the hull of `v_1..v_n` iff some `λ >= 0` satisfies
//! `Σ λ_j v_j = q` and `Σ λ_j = 1`. Phase 1 of a dense tableau simplex
//! decides it. Both answers come with a certificate that is cheap to reuse:
//! an inside answer yields a simplex of at most `d + 1` vertices containing
//! `q`, an outside answer yields a hyperplane separating `q` from every
//! vertex.

use log::warn;

/// Phase-1 objective at or below this value counts as feasible.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
const PIVOT_TOLERANCE: f64 = 1e-12;
const COST_TOLERANCE: f64 = 1e-12;

/// A simplex `{v_j : j in basis}` and the inverse of its `(d+1) x (d+1)`
/// homogeneous coordinate matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexCertificate {
    pub basis: Vec<usize>,
    pub inverse: Vec<f64>,
}

impl SimplexCertificate {
    /// True when every barycentric coordinate of `q` is at least `-tol`.
    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        let m = q.len() + 1;
        (0..m).all(|i| {
            let row = &self.inverse[i * m..(i + 1) * m];
            let lambda: f64 = row[..m - 1].iter().zip(q).map(|(a, b)| a * b).sum::<f64>() + row[m - 1];
            lambda >= -tol
        })
    }
}

/// `normal · x <= offset` for every vertex; `normal · q > offset`.
/// `normal` has unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingPlane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl SeparatingPlane {
    pub fn separates(&self, q: &[f64], tol: f64) -> bool {
        let s: f64 = self.normal.iter().zip(q).map(|(a, b)| a * b).sum();
        s - self.offset > tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    /// `q` is a convex combination of the vertices. The certificate is
    /// absent when the optimal basis kept a degenerate artificial column.
    Inside(Option<SimplexCertificate>),
    Outside(Option<SeparatingPlane>),
    /// The pivot guard tripped; treated as outside.
    Undecided,
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside(_))
    }
}

/// Vertices stored contiguously for the tableau builder.
#[derive(Debug, Clone)]
pub struct VertexSet {
    dim: usize,
    coords: Vec<f64>,
}

impl VertexSet {
    pub fn new<'a, I>(dim: usize, vertices: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut coords = Vec::new();
        for v in vertices {
            assert_eq!(v.len(), dim, "vertex dimension mismatch");
            coords.extend_from_slice(v);
        }
        VertexSet { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn vertex(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    /// Decides whether `q` is in the convex hull.
    pub fn membership(&self, q: &[f64]) -> Membership {
        assert_eq!(q.len(), self.dim, "query dimension mismatch");
        if self.is_empty() {
            return Membership::Outside(None);
        }
        Tableau::new(self, q).solve(self, q)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows + 1` rows of `cols + 1` entries; the last row holds reduced
    /// costs, the last column the right-hand side.
    data: Vec<f64>,
    basis: Vec<usize>,
    signs: Vec<f64>,
    n: usize,
}

impl Tableau {
    fn new(vs: &VertexSet, q: &[f64]) -> Self {
        let n = vs.len();
        let rows = vs.dim + 1;
        let cols = n + rows;
        let width = cols + 1;
        let mut data = vec![0.0; (rows + 1) * width];
        let mut signs = vec![1.0; rows];
        for i in 0..rows {
            let b = if i < vs.dim { q[i] } else { 1.0 };
            let s = if b < 0.0 { -1.0 } else { 1.0 };
            signs[i] = s;
            let row = &mut data[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = s * if i < vs.dim { vs.vertex(j)[i] } else { 1.0 };
            }
            row[n + i] = 1.0;
            row[cols] = s * b;
        }
        // price out the artificial basis
        let (body, cost) = data.split_at_mut(rows * width);
        for i in 0..rows {
            let row = &body[i * width..(i + 1) * width];
            for j in 0..n {
                cost[j] -= row[j];
            }
            cost[cols] -= row[cols];
        }
        Tableau {
            rows,
            cols,
            data,
            basis: (n..n + rows).collect(),
            signs,
            n,
        }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn cost(&self, j: usize) -> f64 {
        self.at(self.rows, j)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.at(r, c);
        for x in &mut self.data[r * w..(r + 1) * w] {
            *x /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            for (x, pr) in self.data[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
        }
        self.basis[r] = c;
    }

    fn solve(mut self, vs: &VertexSet, q: &[f64]) -> Membership {
        let max_pivots = 50 * (self.cols + self.rows);
        let mut bland = false;
        let mut pivots = 0;
        loop {
            // entering column among the structural (vertex) columns only
            let entering = if bland {
                (0..self.n).find(|&j| self.cost(j) < -COST_TOLERANCE)
            } else {
                let mut best = None;
                let mut best_cost = -COST_TOLERANCE;
                for j in 0..self.n {
                    let c = self.cost(j);
                    if c < best_cost {
                        best_cost = c;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                break;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOLERANCE {
                    let ratio = self.at(i, self.cols) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr || (ratio == lr && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                // unbounded direction cannot occur in phase 1; bail out
                break;
            };
            if ratio <= 0.0 {
                bland = true;
            }
            self.pivot(r, c);
            pivots += 1;
            if pivots > max_pivots {
                warn!("hull membership LP exceeded {max_pivots} pivots; treating query as outside");
                return Membership::Undecided;
            }
        }

        let infeasibility = -self.at(self.rows, self.cols);
        if infeasibility <= FEASIBILITY_TOLERANCE {
            Membership::Inside(self.simplex_certificate())
        } else {
            Membership::Outside(self.separating_plane(vs, q))
        }
    }

    fn simplex_certificate(&self) -> Option<SimplexCertificate> {
        if self.basis.iter().any(|&b| b >= self.n) {
            return None;
        }
        let m = self.rows;
        let mut inverse = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                inverse[i * m + k] = self.at(i, self.n + k) * self.signs[k];
            }
        }
        Some(SimplexCertificate {
            basis: self.basis.clone(),
            inverse,
        })
    }

    fn separating_plane(&self, vs: &VertexSet, q: &[f64]) -> Option<SeparatingPlane> {
        let d = vs.dim;
        // duals of the original rows: y_i = s_i (1 - r_{artificial i})
        let y: Vec<f64> = (0..self.rows)
            .map(|i| self.signs[i] * (1.0 - self.cost(self.n + i)))
            .collect();
        let norm = y[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        let plane = SeparatingPlane {
            normal: y[..d].iter().map(|v| v / norm).collect(),
            offset: -y[d] / norm,
        };
        let slack = 1e-9;
        let valid = (0..vs.len()).all(|j| !plane.separates(vs.vertex(j), slack))
            && plane.separates(q, 0.0);
        valid.then_some(plane)
    }
}

/// Membership with certificate reuse, for many queries against one vertex
/// set. Recently useful certificates are kept in move-to-front lists and
/// consulted before solving a new LP.
pub struct CachedMembership<'a> {
    vertices: &'a VertexSet,
    planes: Vec<SeparatingPlane>,
    simplices: Vec<SimplexCertificate>,
    capacity: usize,
    lp_solves: u64,
}

impl<'a> CachedMembership<'a> {
    pub fn new(vertices: &'a VertexSet, capacity: usize) -> Self {
        CachedMembership {
            vertices,
            planes: Vec::new(),
            simplices: Vec::new(),
            capacity: capacity.max(1),
            lp_solves: 0,
        }
    }

    pub fn lp_solves(&self) -> u64 {
        self.lp_solves
    }

    pub fn contains(&mut self, q: &[f64]) -> bool {
        if let Some(i) = self.simplices.iter().position(|s| s.contains(q, FEASIBILITY_TOLERANCE)) {
            promote(&mut self.simplices, i);
            return true;
        }
        if let Some(i) = self.planes.iter().position(|p| p.separates(q, FEASIBILITY_TOLERANCE)) {
            promote(&mut self.planes, i);
            return false;
        }
        self.lp_solves += 1;
        match self.vertices.membership(q) {
            Membership::Inside(cert) => {
                if let Some(c) = cert {
                    push_front(&mut self.simplices, c, self.capacity);
                }
                true
            }
            Membership::Outside(plane) => {
                if let Some(p) = plane {
                    push_front(&mut self.planes, p, self.capacity);
                }
                false
            }
            Membership::Undecided => false,
        }
    }
}

fn promote<T>(list: &mut [T], i: usize) {
    if i > 0 {
        list[..=i].rotate_right(1);
    }
}

fn push_front<T>(list: &mut Vec<T>, item: T, capacity: usize) {
    if list.len() == capacity {
        list.pop();
    }
    list.insert(0, item);
}

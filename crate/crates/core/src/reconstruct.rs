//! From an optimal angle assignment to a circle pattern on the surface.
//!
//! Every tetrahedron is cut by the section surface at the central vertex: a
//! horosphere when the apex is ideal (Euclidean patterns) or the plane dual
//! to the apex when it is hyperideal (hyperbolic patterns). The section of a
//! pyramid is a polygon whose vertices are the feet of the vertical edges;
//! these are the centers of the dual circles. Circles on the section come
//! from planes of H³ by projecting along the geodesics normal to the
//! section: the dual plane of a base vertex gives its dual circle, the base
//! plane of a pyramid gives the principal circle of that pyramid's vertex.
//!
//! Charts are built per pyramid (per vertex of Γ) from intrinsic distances
//! only, then laid out along a breadth-first spanning tree of the pyramid
//! adjacency rooted at vertex 0, whose first corner sits at the origin with
//! the second on the positive x-axis. Euclidean charts are represented in
//! affine coordinates `(x, y, 1)`, hyperbolic ones on the hyperboloid
//! `x² + y² − t² = −1`; both kinds of motions are then 3 × 3 matrices.
//! Euclidean patterns are scaled to total area 1.

use crate::complex::{CellComplex, Doubled, ExtendedComplex};
use crate::conditions::{bouquet_check, AngleData, Geometry};
use crate::hypgeom::{mdot, normalize_timelike, HyperidealTet, MinkVec, VertexKind};
use crate::solver::{build_tets, AngleAssignment, SolverError, TetComplex};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("pieces do not glue: residual {residual:.3e} at {location}")]
    GluingResidualTooLarge { residual: f64, location: String },
    #[error("doubled solution is not symmetric: residual {residual:.3e} at {location}")]
    AsymmetricSolution { residual: f64, location: String },
    #[error("the complex does not match the pattern: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl ReconstructError {
    pub fn name(&self) -> &'static str {
        match self {
            ReconstructError::GluingResidualTooLarge { .. } => "GluingResidualTooLarge",
            ReconstructError::AsymmetricSolution { .. } => "AsymmetricSolution",
            ReconstructError::Mismatch(_) => "Mismatch",
            ReconstructError::Solver(e) => e.name(),
        }
    }
}

// ---------------------------------------------------------------------------
// Plane geometry on the section surface

type Pt = Vector3<f64>;

/// Intrinsic geometry of the flat or hyperbolic plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Plane(Geometry);

fn ldot(a: &Pt, b: &Pt) -> f64 {
    a.x * b.x + a.y * b.y - a.z * b.z
}

impl Plane {
    fn flat(self) -> bool {
        self.0 == Geometry::Euclidean
    }

    fn origin(self) -> Pt {
        Pt::new(0.0, 0.0, 1.0)
    }

    fn dist(self, p: &Pt, q: &Pt) -> f64 {
        if self.flat() {
            ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
        } else {
            (-ldot(p, q)).max(1.0).acosh()
        }
    }

    /// The point at distance `d` from the origin in direction `phi`.
    fn at(self, d: f64, phi: f64) -> Pt {
        if self.flat() {
            Pt::new(d * phi.cos(), d * phi.sin(), 1.0)
        } else {
            Pt::new(d.sinh() * phi.cos(), d.sinh() * phi.sin(), d.cosh())
        }
    }

    /// Orientation-preserving motion taking the origin to `a` and the
    /// positive x-axis to the ray from `a` through `b`.
    fn frame(self, a: &Pt, b: &Pt) -> Matrix3<f64> {
        if self.flat() {
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let n = (dx * dx + dy * dy).sqrt().max(1e-300);
            let (c, s) = (dx / n, dy / n);
            Matrix3::new(c, -s, a.x, s, c, a.y, 0.0, 0.0, 1.0)
        } else {
            let u = b + a * ldot(a, b);
            let u = u / ldot(&u, &u).max(1e-300).sqrt();
            let c = a.cross(&u);
            let w = Pt::new(c.x, c.y, -c.z);
            let w = w / ldot(&w, &w).max(1e-300).sqrt();
            Matrix3::from_columns(&[u, w, *a])
        }
    }

    fn inverse(self, m: &Matrix3<f64>) -> Matrix3<f64> {
        if self.flat() {
            m.try_inverse().unwrap_or_else(Matrix3::identity)
        } else {
            // Lorentz matrices satisfy M⁻¹ = J Mᵀ J.
            let j = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
            j * m.transpose() * j
        }
    }

    /// Motion taking `p1 ↦ q1` and the direction of `p2` to that of `q2`.
    fn motion(self, p1: &Pt, p2: &Pt, q1: &Pt, q2: &Pt) -> Matrix3<f64> {
        self.frame(q1, q2) * self.inverse(&self.frame(p1, p2))
    }

    /// Cosine of the angle at `a` of a triangle with sides `da`, `dab`
    /// adjacent to it and `db` opposite.
    fn cos_angle(self, da: f64, dab: f64, db: f64) -> f64 {
        let c = if self.flat() {
            (da * da + dab * dab - db * db) / (2.0 * da * dab)
        } else {
            (da.cosh() * dab.cosh() - db.cosh()) / (da.sinh() * dab.sinh())
        };
        c.clamp(-1.0, 1.0)
    }

    /// The points at distances `da` from `a` and `db` from `b`, to the left
    /// and to the right of the ray `a → b`. `None` if they do not exist.
    fn trilaterate(self, a: &Pt, b: &Pt, da: f64, db: f64) -> Option<[Pt; 2]> {
        let dab = self.dist(a, b);
        if da <= 0.0 {
            return Some([*a, *a]);
        }
        let raw = if self.flat() {
            (da * da + dab * dab - db * db) / (2.0 * da * dab)
        } else {
            (da.cosh() * dab.cosh() - db.cosh()) / (da.sinh() * dab.sinh())
        };
        if !(raw.abs() <= 1.0 + 1e-9) {
            return None;
        }
        let alpha = raw.clamp(-1.0, 1.0).acos();
        let f = self.frame(a, b);
        Some([f * self.at(da, alpha), f * self.at(da, -alpha)])
    }

    fn place_left(self, a: &Pt, b: &Pt, da: f64, db: f64) -> Pt {
        let dab = self.dist(a, b);
        let alpha = self.cos_angle(da, dab, db).acos();
        self.frame(a, b) * self.at(da, alpha)
    }

    /// Angle at `p` between the geodesics to `q` and `r`.
    fn angle_at(self, p: &Pt, q: &Pt, r: &Pt) -> f64 {
        let (u, v) = if self.flat() {
            (q - p, r - p)
        } else {
            (q + p * ldot(p, q), r + p * ldot(p, r))
        };
        let (uu, vv, uv) = if self.flat() {
            (u.x * u.x + u.y * u.y, v.x * v.x + v.y * v.y, u.x * v.x + u.y * v.y)
        } else {
            (ldot(&u, &u), ldot(&v, &v), ldot(&u, &v))
        };
        (uv / (uu * vv).sqrt()).clamp(-1.0, 1.0).acos()
    }

    /// Distance from `x` to the geodesic through `a` and `b`.
    fn line_distance(self, x: &Pt, a: &Pt, b: &Pt) -> f64 {
        if self.flat() {
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            ((dx * (x.y - a.y) - dy * (x.x - a.x)) / (dx * dx + dy * dy).sqrt()).abs()
        } else {
            let c = a.cross(b);
            let n = Pt::new(c.x, c.y, -c.z);
            let n = n / ldot(&n, &n).sqrt();
            ldot(x, &n).abs().asinh()
        }
    }

    fn triangle_area(self, a: &Pt, b: &Pt, c: &Pt) -> f64 {
        if self.flat() {
            0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs()
        } else {
            (PI - self.angle_at(a, b, c) - self.angle_at(b, c, a) - self.angle_at(c, a, b)).max(0.0)
        }
    }

    /// Intersection angle of two circles (the angle at an intersection point
    /// between the radii), or `None` if they do not meet.
    fn intersection_angle(self, r1: f64, r2: f64, d: f64) -> Option<f64> {
        let c = if self.flat() {
            (r1 * r1 + r2 * r2 - d * d) / (2.0 * r1 * r2)
        } else {
            (r1.cosh() * r2.cosh() - d.cosh()) / (r1.sinh() * r2.sinh())
        };
        if c.abs() <= 1.0 + 1e-12 {
            Some(c.clamp(-1.0, 1.0).acos())
        } else {
            None
        }
    }

    /// Relative residual of the orthogonality of two circles.
    fn orthogonality(self, r1: f64, r2: f64, d: f64) -> f64 {
        if self.flat() {
            (d * d - r1 * r1 - r2 * r2).abs() / (d * d).max(1e-300)
        } else {
            (d.cosh() - r1.cosh() * r2.cosh()).abs() / d.cosh()
        }
    }

    /// Output coordinates: the plane itself, or the Klein disk.
    fn to_output(self, p: &Pt) -> [f64; 2] {
        if self.flat() {
            [p.x, p.y]
        } else {
            [p.x / p.z, p.y / p.z]
        }
    }

    fn from_output(self, c: [f64; 2]) -> Pt {
        if self.flat() {
            Pt::new(c[0], c[1], 1.0)
        } else {
            let s = (1.0 - c[0] * c[0] - c[1] * c[1]).max(1e-300).sqrt();
            Pt::new(c[0] / s, c[1] / s, 1.0 / s)
        }
    }

    fn scale(self, p: &Pt, s: f64) -> Pt {
        Pt::new(p.x * s, p.y * s, 1.0)
    }
}

// ---------------------------------------------------------------------------
// Sections of tetrahedra

/// Intrinsic data of one tetrahedron's section, in its own units.
#[derive(Clone, Debug)]
struct Section {
    points: [MinkVec; 3],
    /// Dual radii at the three base corners.
    radii: [f64; 3],
    center: MinkVec,
    principal_radius: f64,
}

impl Section {
    fn new(tet: &HyperidealTet, geometry: Geometry) -> Section {
        let apex = tet.vertices[0];
        match geometry {
            Geometry::Euclidean => {
                // Horosphere ⟨x, u⟩ = −1 at the ideal apex; the foot of the
                // geodesic from u normal to the dual plane of ξ is a u + b ξ.
                let foot = |xi: &MinkVec| -> (MinkVec, f64) {
                    let c = mdot(xi, &apex);
                    let b = -1.0 / c;
                    let a = (1.0 + b * b * mdot(xi, xi)) / 2.0;
                    (apex * a + xi * b, 1.0 / c.abs())
                };
                let mut points = [MinkVec::zeros(); 3];
                let mut radii = [0.0; 3];
                for k in 0..3 {
                    let (p, r) = foot(&tet.vertices[k + 1]);
                    points[k] = p;
                    radii[k] = if tet.kinds[k + 1] == VertexKind::Ideal { 0.0 } else { r };
                }
                let (center, principal_radius) = foot(&tet.normals[0]);
                Section { points, radii, center, principal_radius }
            }
            Geometry::Hyperbolic => {
                // Plane P₀ dual to the apex; feet of perpendiculars to it and
                // radii of orthogonal projections: sinh ρ · sinh l = 1.
                let foot = |xi: &MinkVec, ideal: bool| -> (MinkVec, f64) {
                    let c = mdot(xi, &apex);
                    let p = normalize_timelike(&(xi - apex * c));
                    let r = if ideal { 0.0 } else { (1.0 / (c * c - 1.0).max(1e-300).sqrt()).asinh() };
                    (p, r)
                };
                let mut points = [MinkVec::zeros(); 3];
                let mut radii = [0.0; 3];
                for k in 0..3 {
                    let (p, r) = foot(&tet.vertices[k + 1], tet.kinds[k + 1] == VertexKind::Ideal);
                    points[k] = p;
                    radii[k] = r;
                }
                let (center, principal_radius) = foot(&tet.normals[0], false);
                Section { points, radii, center, principal_radius }
            }
        }
    }

    fn dist(&self, geometry: Geometry, p: &MinkVec, q: &MinkVec) -> f64 {
        let x = mdot(p, q);
        match geometry {
            Geometry::Euclidean => (-2.0 * (x + 1.0)).max(0.0).sqrt(),
            Geometry::Hyperbolic => (-x).max(1.0).acosh(),
        }
    }

    fn side(&self, geometry: Geometry, k: usize, l: usize) -> f64 {
        self.dist(geometry, &self.points[k], &self.points[l])
    }

    fn center_dist(&self, geometry: Geometry, k: usize) -> f64 {
        self.dist(geometry, &self.center, &self.points[k])
    }
}

// ---------------------------------------------------------------------------
// Pattern

/// A circle in chart coordinates (plane or Klein disk); the radius is
/// intrinsic (Euclidean or hyperbolic).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// The section polygon of one pyramid, in its own coordinates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Chart {
    /// Vertex of Γ whose pyramid this is.
    pub vertex: usize,
    /// Faces of Γ at the polygon corners, in rotation order.
    pub corners: Vec<usize>,
    /// Corner positions (dual circle centers).
    pub points: Vec<[f64; 2]>,
    /// Dual radius at each corner.
    pub dual_radii: Vec<f64>,
    pub principal: Circle,
    /// Motion from this chart to the developed (root) frame, as a 3 × 3
    /// matrix acting on affine or hyperboloid coordinates.
    pub placement: [[f64; 3]; 3],
    /// Parent chart in the spanning tree (`None` for the root).
    pub parent: Option<usize>,
}

/// Two charts glued along the polygon side crossing an edge of Γ.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Adjacency {
    pub edge: usize,
    /// (chart, corner position) of the side start in the first chart; the
    /// side runs from `left.1` to `left.1 + 1`.
    pub left: (usize, usize),
    pub right: (usize, usize),
    /// Motion from the right chart into the left chart.
    pub transition: [[f64; 3]; 3],
    pub in_tree: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DualCircle {
    pub face: usize,
    /// Chart in which `center` is expressed.
    pub chart: usize,
    pub center: [f64; 2],
    pub radius: f64,
    pub cone_angle: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PrincipalCircle {
    pub vertex: usize,
    pub chart: usize,
    pub center: [f64; 2],
    pub radius: f64,
}

/// Residuals of the development itself.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct DevelopmentResiduals {
    /// Largest mismatch of a polygon side shared by two pyramids (relative
    /// to the side length).
    #[serde(deserialize_with = "crate::io::nullable_f64")]
    pub gluing: f64,
    /// Largest mismatch of the horosphere scale around a cycle of pyramids
    /// (Euclidean) — the consistency of matched horospheres.
    #[serde(deserialize_with = "crate::io::nullable_f64")]
    pub horosphere_consistency: f64,
    /// Largest disagreement between tetrahedra of one pyramid about its
    /// principal circle or a dual radius.
    #[serde(deserialize_with = "crate::io::nullable_f64")]
    pub principal_consistency: f64,
    /// Largest relative residual of orthogonality between a principal circle
    /// and the dual circles at its polygon corners.
    #[serde(deserialize_with = "crate::io::nullable_f64")]
    pub orthogonality: f64,
}

/// A reconstructed circle pattern.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Pattern {
    pub geometry: Geometry,
    pub charts: Vec<Chart>,
    pub adjacencies: Vec<Adjacency>,
    pub dual_circles: Vec<DualCircle>,
    pub principal_circles: Vec<PrincipalCircle>,
    /// Intersection angle of the principal circles at every edge of Γ.
    #[serde(deserialize_with = "crate::io::nullable_f64_vec")]
    pub measured_theta: Vec<f64>,
    /// Edges of Γ around every face, for verification.
    pub face_edges: Vec<Vec<usize>>,
    pub euler_characteristic: i64,
    /// Total area of the surface.
    pub area: f64,
    pub residuals: DevelopmentResiduals,
}

/// Options of the development.
#[derive(Clone, Copy, Debug)]
pub struct DevelopOptions {
    /// Largest acceptable gluing residual.
    pub max_gluing_residual: f64,
}

impl Default for DevelopOptions {
    fn default() -> Self {
        DevelopOptions { max_gluing_residual: 1e-6 }
    }
}

fn to_array(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn from_array(a: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j])
}

/// Raw chart of one pyramid before scaling and layout.
struct RawChart {
    points: Vec<Pt>,
    radii: Vec<f64>,
    center: Pt,
    radius: f64,
    area: f64,
    consistency: f64,
}

fn develop_pyramid(plane: Plane, tc: &TetComplex, u: usize, sections: &[Section]) -> RawChart {
    let g = plane.0;
    let pyr = &tc.pyramids[u];
    let d = pyr.corners.len();
    let b = pyr.fan_base;
    let pos = |k: usize| (b + k) % d;
    // Scale of each tetrahedron relative to the first (Euclidean only):
    // consecutive fan tetrahedra share the diagonal from the fan base.
    let mut scales = vec![1.0; pyr.tets.len()];
    let mut consistency: f64 = 0.0;
    if plane.flat() {
        for i in 1..pyr.tets.len() {
            let prev = &sections[pyr.tets[i - 1]];
            let cur = &sections[pyr.tets[i]];
            scales[i] = scales[i - 1] * prev.side(g, 0, 2) / cur.side(g, 0, 1);
        }
    }
    let mut points = vec![None; d];
    let mut radii = vec![f64::NAN; d];
    let mut area = 0.0;
    let mut center = plane.origin();
    let mut radius = 0.0;
    for (i, &t) in pyr.tets.iter().enumerate() {
        let s = &sections[t];
        let k = scales[i];
        let local = [pos(0), pos(i + 1), pos(i + 2)];
        if i == 0 {
            points[local[0]] = Some(plane.origin());
            points[local[1]] = Some(plane.at(k * s.side(g, 0, 1), 0.0));
        }
        let p0 = points[local[0]].unwrap();
        let p1 = points[local[1]].unwrap();
        let p2 = plane.place_left(&p0, &p1, k * s.side(g, 0, 2), k * s.side(g, 1, 2));
        points[local[2]] = Some(p2);
        area += plane.triangle_area(&p0, &p1, &p2);
        for (j, &p) in local.iter().enumerate() {
            let r = k * s.radii[j];
            if radii[p].is_nan() {
                radii[p] = r;
            } else {
                consistency = consistency.max((radii[p] - r).abs());
            }
        }
        // Principal circle center, from its distances to two corners and
        // disambiguated by the third.
        let (d0, d1, d2) = (k * s.center_dist(g, 0), k * s.center_dist(g, 1), k * s.center_dist(g, 2));
        let cands = plane.trilaterate(&p0, &p1, d0, d1).unwrap_or_else(|| {
            let c = plane.place_left(&p0, &p1, d0, d1);
            [c, c]
        });
        let c = if (plane.dist(&cands[0], &p2) - d2).abs() <= (plane.dist(&cands[1], &p2) - d2).abs() {
            cands[0]
        } else {
            cands[1]
        };
        let r = k * s.principal_radius;
        if i == 0 {
            center = c;
            radius = r;
        } else {
            consistency = consistency.max(plane.dist(&center, &c)).max((radius - r).abs());
        }
    }
    RawChart { points: points.into_iter().map(|p| p.unwrap()).collect(), radii, center, radius, area, consistency }
}

/// Develops the glued cone complex into a circle pattern.
pub fn develop(
    cx: &CellComplex,
    tc: &TetComplex,
    theta: &AngleAssignment,
    opts: &DevelopOptions,
) -> Result<Pattern, ReconstructError> {
    if tc.pyramids.len() != cx.num_vertices() || tc.num_faces != cx.num_faces() {
        return Err(ReconstructError::Mismatch("complex sizes differ".into()));
    }
    let plane = Plane(tc.geometry);
    let tets = build_tets(tc, &theta.to_vector())?;
    let sections: Vec<Section> = tets.iter().map(|t| Section::new(t, tc.geometry)).collect();
    let mut raw: Vec<RawChart> = (0..tc.pyramids.len()).map(|u| develop_pyramid(plane, tc, u, &sections)).collect();

    // Sides shared across pyramids: for pyramid u and rotation position i,
    // the half-edge g = out_u[i] separates corners i and i+1; in the
    // pyramid v at the other end, twin(g) = out_v[j] separates corners j
    // (the same face as u's corner i+1) and j+1 (u's corner i).
    let mut position_of = vec![(usize::MAX, usize::MAX); cx.num_half_edges()];
    for (u, p) in tc.pyramids.iter().enumerate() {
        for (i, &h) in p.half_edges.iter().enumerate() {
            position_of[h] = (u, i);
        }
    }
    let mut sides = Vec::with_capacity(cx.num_edges());
    for e in 0..cx.num_edges() {
        let h = cx.edge(e).half_edge;
        let t = cx.twin(h).ok_or_else(|| ReconstructError::Mismatch("complex has boundary".into()))?;
        sides.push((e, position_of[h], position_of[t]));
    }
    let side_len = |raw: &[RawChart], (u, i): (usize, usize)| {
        let d = raw[u].points.len();
        plane.dist(&raw[u].points[i], &raw[u].points[(i + 1) % d])
    };

    // Horosphere scales (Euclidean) by breadth-first search over pyramids.
    let n = raw.len();
    let mut neighbours = vec![Vec::new(); n];
    for (k, &(_, l, r)) in sides.iter().enumerate() {
        neighbours[l.0].push((k, r.0));
        neighbours[r.0].push((k, l.0));
    }
    let mut order = Vec::with_capacity(n);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(k, v) in &neighbours[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((k, u));
                queue.push_back(v);
            }
        }
    }
    if order.len() != n {
        return Err(ReconstructError::Mismatch("pyramid adjacency is disconnected".into()));
    }
    let mut residuals = DevelopmentResiduals::default();
    if plane.flat() {
        let mut sigma = vec![1.0; n];
        for &v in &order[1..] {
            let (k, u) = parent[v].unwrap();
            let (_, l, r) = sides[k];
            let (mine, theirs) = if l.0 == v { (l, r) } else { (r, l) };
            debug_assert_eq!(theirs.0, u);
            sigma[v] = sigma[u] * side_len(&raw, theirs) / side_len(&raw, mine);
        }
        for &(_, l, r) in &sides {
            let a = sigma[l.0] * side_len(&raw, l);
            let b = sigma[r.0] * side_len(&raw, r);
            residuals.horosphere_consistency = residuals.horosphere_consistency.max((a - b).abs() / a.max(b));
        }
        let total: f64 = (0..n).map(|u| sigma[u] * sigma[u] * raw[u].area).sum();
        let norm = 1.0 / total.sqrt();
        for (u, ch) in raw.iter_mut().enumerate() {
            let s = sigma[u] * norm;
            ch.points = ch.points.iter().map(|p| plane.scale(p, s)).collect();
            ch.radii = ch.radii.iter().map(|r| r * s).collect();
            ch.center = plane.scale(&ch.center, s);
            ch.radius *= s;
            ch.area *= s * s;
            ch.consistency *= s;
        }
    }
    let area: f64 = raw.iter().map(|c| c.area).sum();

    // Transitions and layout.
    let mut adjacencies = Vec::with_capacity(sides.len());
    let mut placement = vec![Matrix3::identity(); n];
    let mut transitions = Vec::with_capacity(sides.len());
    for &(e, l, r) in &sides {
        let dl = raw[l.0].points.len();
        let dr = raw[r.0].points.len();
        let (l0, l1) = (raw[l.0].points[l.1], raw[l.0].points[(l.1 + 1) % dl]);
        let (r0, r1) = (raw[r.0].points[r.1], raw[r.0].points[(r.1 + 1) % dr]);
        // Right corner j ↔ left corner i+1, right corner j+1 ↔ left corner i.
        let m = plane.motion(&r0, &r1, &l1, &l0);
        let (a, b) = (plane.dist(&l0, &l1), plane.dist(&r0, &r1));
        let mismatch = (a - b).abs() / a.max(b).max(1e-300);
        if mismatch > residuals.gluing {
            residuals.gluing = mismatch;
        }
        if mismatch > opts.max_gluing_residual {
            return Err(ReconstructError::GluingResidualTooLarge {
                residual: mismatch,
                location: format!("side crossing edge {e}"),
            });
        }
        transitions.push(m);
        adjacencies.push(Adjacency { edge: e, left: l, right: r, transition: to_array(&m), in_tree: false });
    }
    for &v in &order[1..] {
        let (k, u) = parent[v].unwrap();
        adjacencies[k].in_tree = true;
        let m = if adjacencies[k].right.0 == v { transitions[k] } else { plane.inverse(&transitions[k]) };
        placement[v] = placement[u] * m;
    }

    for ch in &raw {
        residuals.principal_consistency = residuals.principal_consistency.max(ch.consistency);
        for (p, &r) in ch.points.iter().zip(&ch.radii) {
            let o = plane.orthogonality(ch.radius, r, plane.dist(&ch.center, p));
            residuals.orthogonality = residuals.orthogonality.max(o);
        }
    }

    let charts: Vec<Chart> = raw
        .iter()
        .enumerate()
        .map(|(u, ch)| Chart {
            vertex: u,
            corners: tc.pyramids[u].corners.clone(),
            points: ch.points.iter().map(|p| plane.to_output(p)).collect(),
            dual_radii: ch.radii.clone(),
            principal: Circle { center: plane.to_output(&ch.center), radius: ch.radius },
            placement: to_array(&placement[u]),
            parent: parent[u].map(|(_, p)| p),
        })
        .collect();

    let mut pattern = Pattern {
        geometry: tc.geometry,
        charts,
        adjacencies,
        dual_circles: Vec::new(),
        principal_circles: Vec::new(),
        measured_theta: Vec::new(),
        face_edges: (0..cx.num_faces()).map(|f| cx.face(f).iter().map(|&h| cx.edge_of(h)).collect()).collect(),
        euler_characteristic: cx.euler_characteristic(),
        area,
        residuals,
    };
    pattern.principal_circles = pattern
        .charts
        .iter()
        .map(|c| PrincipalCircle { vertex: c.vertex, chart: c.vertex, center: c.principal.center, radius: c.principal.radius })
        .collect();
    let cone = measured_cone_angles(&pattern);
    let mut dual = Vec::with_capacity(cx.num_faces());
    for f in 0..cx.num_faces() {
        let (u, i) = pattern
            .charts
            .iter()
            .enumerate()
            .find_map(|(u, c)| c.corners.iter().position(|&x| x == f).map(|i| (u, i)))
            .ok_or_else(|| ReconstructError::Mismatch(format!("face {f} has no corner")))?;
        dual.push(DualCircle {
            face: f,
            chart: u,
            center: pattern.charts[u].points[i],
            radius: pattern.charts[u].dual_radii[i],
            cone_angle: cone[f],
        });
    }
    pattern.dual_circles = dual;
    pattern.measured_theta = measure_theta(&pattern).into_iter().map(|(_, t)| t.unwrap_or(f64::NAN)).collect();
    Ok(pattern)
}

fn chart_point(plane: Plane, c: &Chart, i: usize) -> Pt {
    plane.from_output(c.points[i])
}

/// Sum over charts of the polygon angle at every corner over face `f`.
fn measured_cone_angles(p: &Pattern) -> Vec<f64> {
    let plane = Plane(p.geometry);
    let mut out = vec![0.0; p.face_edges.len()];
    for c in &p.charts {
        let d = c.corners.len();
        for i in 0..d {
            let a = chart_point(plane, c, i);
            let prev = chart_point(plane, c, (i + d - 1) % d);
            let next = chart_point(plane, c, (i + 1) % d);
            out[c.corners[i]] += plane.angle_at(&a, &prev, &next);
        }
    }
    out
}

/// For each adjacency: the edge and the intersection angle of the two
/// principal circles, measured in the left chart.
fn measure_theta(p: &Pattern) -> Vec<(usize, Option<f64>)> {
    let plane = Plane(p.geometry);
    let mut out = vec![(0, None); p.adjacencies.len()];
    for (k, a) in p.adjacencies.iter().enumerate() {
        let (cl, cr) = (&p.charts[a.left.0], &p.charts[a.right.0]);
        let m = from_array(&a.transition);
        let ol = plane.from_output(cl.principal.center);
        let or = m * plane.from_output(cr.principal.center);
        let d = plane.dist(&ol, &or);
        out[k] = (a.edge, plane.intersection_angle(cl.principal.radius, cr.principal.radius, d));
    }
    let mut by_edge = vec![(0, None); out.len()];
    for (k, a) in p.adjacencies.iter().enumerate() {
        if a.edge < by_edge.len() {
            by_edge[a.edge] = out[k];
        }
    }
    by_edge
}

/// Verification report of a pattern against the angle data.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerifyReport {
    /// Largest |measured θ − θ| over edges (∞ if two circles do not meet).
    pub theta_error: f64,
    pub theta_error_edge: Option<usize>,
    /// Largest |measured cone angle − (2π − κ)| over faces.
    pub cone_angle_error: f64,
    /// At every ideal dual circle, |Σθ around the face − (2π − κ)|.
    pub ideal_face_sum_error: f64,
    /// Whether the closing-up test holds at every ideal dual circle.
    pub bouquet_ok: bool,
    /// Largest distance from an intersection point of two adjacent
    /// principal circles to the line through the two dual centers.
    pub collinearity: f64,
    /// Largest relative orthogonality residual (principal vs dual circles).
    pub orthogonality: f64,
    /// Gauss–Bonnet residual of the reconstructed curvatures:
    /// |Σκ − area·K − 2πχ| with K = 0 or −1.
    pub gauss_bonnet: f64,
    /// Smallest gap between two dual disks of one chart (negative if they
    /// overlap).
    pub min_dual_gap: f64,
    /// Largest radius of a dual circle at a face declared ideal.
    pub ideal_radius: f64,
    pub development: DevelopmentResiduals,
}

impl VerifyReport {
    /// The largest of the residuals that should vanish.
    pub fn max_residual(&self) -> f64 {
        [
            self.theta_error,
            self.cone_angle_error,
            self.ideal_face_sum_error,
            self.collinearity,
            self.orthogonality,
            self.gauss_bonnet,
            self.ideal_radius,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Recomputes every angle of the pattern from the circle geometry and
/// compares it with the angle data.
pub fn verify_pattern(p: &Pattern, data: &AngleData) -> VerifyReport {
    let plane = Plane(p.geometry);
    let measured = measure_theta(p);
    let mut theta_error: f64 = 0.0;
    let mut theta_error_edge = None;
    for (e, m) in measured.iter().enumerate() {
        let err = match (m.1, data.theta.get(e)) {
            (Some(t), Some(want)) => (t - want.value()).abs(),
            _ => f64::INFINITY,
        };
        if err > theta_error || theta_error_edge.is_none() && err.is_infinite() {
            theta_error = err;
            theta_error_edge = Some(e);
        }
    }
    let cone = measured_cone_angles(p);
    let mut cone_angle_error: f64 = 0.0;
    let mut ideal_face_sum_error: f64 = 0.0;
    let mut bouquet_ok = true;
    let mut ideal_radius: f64 = 0.0;
    let mut curvature = 0.0;
    for (f, edges) in p.face_edges.iter().enumerate() {
        let kappa = data.kappa.get(f).map(|k| k.value()).unwrap_or(f64::NAN);
        cone_angle_error = cone_angle_error.max((cone[f] - (2.0 * PI - kappa)).abs());
        curvature += 2.0 * PI - cone[f];
        let ideal = p.dual_circles.get(f).map(|d| d.radius == 0.0).unwrap_or(false);
        if ideal {
            let angles: Vec<f64> = edges.iter().map(|&e| measured.get(e).and_then(|m| m.1).unwrap_or(f64::NAN)).collect();
            let s: f64 = angles.iter().sum();
            ideal_face_sum_error = ideal_face_sum_error.max((s - (2.0 * PI - kappa)).abs());
            bouquet_ok &= bouquet_check(&angles, kappa);
        }
    }
    for c in &p.charts {
        for (i, &f) in c.corners.iter().enumerate() {
            if p.dual_circles.get(f).map(|d| d.radius == 0.0).unwrap_or(false) {
                ideal_radius = ideal_radius.max(c.dual_radii[i]);
            }
        }
    }
    let curvature_k = if plane.flat() { 0.0 } else { -1.0 };
    let gauss_bonnet = (curvature + curvature_k * p.area - 2.0 * PI * p.euler_characteristic as f64).abs();

    let mut collinearity: f64 = 0.0;
    for a in &p.adjacencies {
        let (cl, cr) = (&p.charts[a.left.0], &p.charts[a.right.0]);
        let m = from_array(&a.transition);
        let ol = plane.from_output(cl.principal.center);
        let or = m * plane.from_output(cr.principal.center);
        let d = cl.corners.len();
        let (c1, c2) = (chart_point(plane, cl, a.left.1), chart_point(plane, cl, (a.left.1 + 1) % d));
        if let Some(xs) = plane.trilaterate(&ol, &or, cl.principal.radius, cr.principal.radius) {
            for x in xs {
                collinearity = collinearity.max(plane.line_distance(&x, &c1, &c2));
            }
        } else {
            collinearity = f64::INFINITY;
        }
    }
    let mut orthogonality: f64 = 0.0;
    let mut min_dual_gap = f64::INFINITY;
    for c in &p.charts {
        let o = plane.from_output(c.principal.center);
        let pts: Vec<Pt> = (0..c.corners.len()).map(|i| chart_point(plane, c, i)).collect();
        for (i, x) in pts.iter().enumerate() {
            orthogonality = orthogonality.max(plane.orthogonality(c.principal.radius, c.dual_radii[i], plane.dist(&o, x)));
            for j in i + 1..pts.len() {
                let gap = plane.dist(x, &pts[j]) - c.dual_radii[i] - c.dual_radii[j];
                min_dual_gap = min_dual_gap.min(gap);
            }
        }
    }
    VerifyReport {
        theta_error,
        theta_error_edge,
        cone_angle_error,
        ideal_face_sum_error,
        bouquet_ok,
        collinearity,
        orthogonality,
        gauss_bonnet,
        min_dual_gap,
        ideal_radius,
        development: p.residuals.clone(),
    }
}

// ---------------------------------------------------------------------------
// Restriction of a doubled pattern

/// A framed pattern on a surface with boundary, obtained as one half of a
/// symmetric pattern on the double.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FramedPattern {
    pub geometry: Geometry,
    /// Charts of the vertices of Γ (the first copy in the double).
    pub charts: Vec<Chart>,
    pub dual_circles: Vec<DualCircle>,
    pub principal_circles: Vec<PrincipalCircle>,
    /// Intersection angle at every edge of Γ.
    #[serde(deserialize_with = "crate::io::nullable_f64_vec")]
    pub measured_theta: Vec<f64>,
    /// Angle between the boundary geodesic and the principal circle at each
    /// boundary vertex: half the angle of the doubled spoke.
    pub boundary_angles: BTreeMap<usize, f64>,
    /// Angle at each boundary edge: half the curvature of the collar face of
    /// the double.
    pub polygonal_angles: BTreeMap<usize, f64>,
    /// Number of geodesic boundary segments.
    pub boundary_segments: usize,
    /// Largest discrepancy between the pattern and its mirror image.
    pub symmetry_residual: f64,
}

/// Cuts a pattern on the double along the fixed set of the involution.
pub fn restrict_symmetric(
    p: &Pattern,
    ext: &ExtendedComplex,
    doubled: &Doubled,
    tol: f64,
) -> Result<FramedPattern, ReconstructError> {
    let c = &doubled.complex;
    if p.charts.len() != c.num_vertices() || p.dual_circles.len() != c.num_faces() {
        return Err(ReconstructError::Mismatch("pattern is not on the doubled complex".into()));
    }
    let mut residual: f64 = 0.0;
    let mut location = String::new();
    let mut bump = |r: f64, what: String| {
        if r > residual {
            residual = r;
            location = what;
        }
    };
    for v in 0..c.num_vertices() {
        let w = doubled.mirror_vertex(v);
        bump((p.charts[v].principal.radius - p.charts[w].principal.radius).abs(), format!("principal radius of vertex {v}"));
    }
    let cone = measured_cone_angles(p);
    for f in 0..c.num_faces() {
        let g = doubled.mirror_face(f);
        bump((p.dual_circles[f].radius - p.dual_circles[g].radius).abs(), format!("dual radius of face {f}"));
        bump((cone[f] - cone[g]).abs(), format!("cone angle of face {f}"));
    }
    for e in 0..c.num_edges() {
        let m = doubled.mirror_edge(e);
        bump((p.measured_theta[e] - p.measured_theta[m]).abs(), format!("angle at edge {e}"));
    }
    if !(residual <= tol) {
        return Err(ReconstructError::AsymmetricSolution { residual, location });
    }
    let nv = doubled.base_vertices;
    let nf = doubled.base_faces;
    let mut boundary_angles = BTreeMap::new();
    let mut polygonal_angles = BTreeMap::new();
    for k in 0..ext.num_blocks() {
        boundary_angles.insert(ext.base_vertex_of_spoke[k], p.measured_theta[doubled.spoke_edges[k]] / 2.0);
        polygonal_angles.insert(ext.base_edge_of_outer[k], (2.0 * PI - cone[doubled.collar_faces[k]]) / 2.0);
    }
    Ok(FramedPattern {
        geometry: p.geometry,
        charts: p.charts[..nv].to_vec(),
        dual_circles: p.dual_circles[..nf].to_vec(),
        principal_circles: p.principal_circles[..nv].to_vec(),
        measured_theta: p.measured_theta[..doubled.base_edges].to_vec(),
        boundary_angles,
        polygonal_angles,
        boundary_segments: ext.num_blocks(),
        symmetry_residual: residual,
    })
}

// ---------------------------------------------------------------------------
// SVG

#[derive(Clone, Copy, Debug)]
pub struct RenderOptions {
    /// Width and height of the view box.
    pub size: f64,
    /// Number of segments of the polylines approximating hyperbolic circles.
    pub segments: usize,
    pub labels: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { size: 1024.0, segments: 64, labels: true }
    }
}

/// Renders the developed pattern: Euclidean patterns in the plane of the
/// root chart, hyperbolic ones in the Klein disk of the root chart.
pub fn render_svg(p: &Pattern, opts: &RenderOptions) -> String {
    let plane = Plane(p.geometry);
    let place = |c: &Chart, x: [f64; 2]| -> Pt { from_array(&c.placement) * plane.from_output(x) };
    let circle_points = |center: &Pt, r: f64| -> Vec<[f64; 2]> {
        (0..opts.segments.max(3))
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / opts.segments.max(3) as f64;
                let f = if plane.flat() {
                    Matrix3::new(1.0, 0.0, center.x, 0.0, 1.0, center.y, 0.0, 0.0, 1.0)
                } else {
                    // Any frame at the center will do; pick one towards the origin direction.
                    let other = if center.x.abs() + center.y.abs() < 1e-12 { plane.at(1.0, 0.0) } else { plane.origin() };
                    plane.frame(center, &other)
                };
                plane.to_output(&(f * plane.at(r, phi)))
            })
            .collect()
    };

    // Bounding box in output coordinates.
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut grow = |q: [f64; 2], r: f64| {
        for k in 0..2 {
            lo[k] = lo[k].min(q[k] - r);
            hi[k] = hi[k].max(q[k] + r);
        }
    };
    if plane.flat() {
        for c in &p.charts {
            for &x in &c.points {
                grow(plane.to_output(&place(c, x)), 0.0);
            }
            grow(plane.to_output(&place(c, c.principal.center)), c.principal.radius);
        }
    } else {
        grow([0.0, 0.0], 1.0);
    }
    if !lo[0].is_finite() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let margin = 0.05 * opts.size;
    let k = (opts.size - 2.0 * margin) / span;
    let tx = |q: [f64; 2]| -> (f64, f64) { (margin + (q[0] - lo[0]) * k, opts.size - margin - (q[1] - lo[1]) * k) };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {0} {0}" width="{0}" height="{0}">"#,
        opts.size
    );
    if !plane.flat() {
        let (cx, cy) = tx([0.0, 0.0]);
        let _ = writeln!(s, r#"<circle class="klein-disk" cx="{cx:.6}" cy="{cy:.6}" r="{:.6}" fill="none" stroke="black"/>"#, k);
    }
    let _ = writeln!(s, r##"<g id="charts" fill="#eef3fb" stroke="#8899aa" stroke-width="1">"##);
    for c in &p.charts {
        let pts: Vec<String> = c.points.iter().map(|&x| {
            let (a, b) = tx(plane.to_output(&place(c, x)));
            format!("{a:.6},{b:.6}")
        }).collect();
        let _ = writeln!(s, r#"<polygon class="chart" data-vertex="{}" points="{}"/>"#, c.vertex, pts.join(" "));
    }
    let _ = writeln!(s, "</g>");
    let draw_circle = |s: &mut String, class: &str, attrs: &str, c: &Chart, center: [f64; 2], r: f64| {
        let o = place(c, center);
        if plane.flat() {
            let (a, b) = tx(plane.to_output(&o));
            let _ = writeln!(s, r#"<circle class="{class}" cx="{a:.6}" cy="{b:.6}" r="{:.6}" {attrs}/>"#, r * k);
        } else {
            let pts: Vec<String> = circle_points(&o, r).into_iter().map(|q| {
                let (a, b) = tx(q);
                format!("{a:.6},{b:.6}")
            }).collect();
            let _ = writeln!(s, r#"<polygon class="{class}" points="{}" {attrs}/>"#, pts.join(" "));
        }
    };
    let _ = writeln!(s, r#"<g id="principal-circles">"#);
    for pc in &p.principal_circles {
        let c = &p.charts[pc.chart];
        draw_circle(&mut s, "principal", r##"fill="none" stroke="#1f4e9c" stroke-width="1.5""##, c, pc.center, pc.radius);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="dual-circles">"#);
    for dc in &p.dual_circles {
        let c = &p.charts[dc.chart];
        if dc.radius > 0.0 {
            draw_circle(&mut s, "dual", r##"fill="none" stroke="#b03a2e" stroke-dasharray="6 4""##, c, dc.center, dc.radius);
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="cone-points">"#);
    for dc in &p.dual_circles {
        let c = &p.charts[dc.chart];
        let (a, b) = tx(plane.to_output(&place(c, dc.center)));
        let kappa = 2.0 * PI - dc.cone_angle;
        let _ = writeln!(s, r#"<circle class="cone-point" data-face="{}" cx="{a:.6}" cy="{b:.6}" r="3" fill="black"/>"#, dc.face);
        if opts.labels {
            let _ = writeln!(s, r#"<text x="{:.6}" y="{:.6}" font-size="12">κ={kappa:.4}</text>"#, a + 5.0, b - 5.0);
        }
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use crate::conditions::{check_conditions, CheckOptions};
    use crate::solver::{build_tet_complex, initial_feasible_point, maximize, target_edge_sums, FanOptions, SolverOptions};

    fn solve(cx: &CellComplex, data: &AngleData) -> Pattern {
        let verdict = check_conditions(cx, data, &CheckOptions::default()).unwrap();
        let ideal = verdict.ideal_faces().unwrap().clone();
        let tc = build_tet_complex(cx, &ideal, data.geometry, FanOptions::default()).unwrap();
        let targets = target_edge_sums(&tc, data, &verdict).unwrap();
        let start = initial_feasible_point(&tc, &targets).unwrap();
        let (theta, _) = maximize(&tc, &targets, &start, &SolverOptions::default()).unwrap();
        develop(cx, &tc, &theta, &DevelopOptions::default()).unwrap()
    }

    #[test]
    fn plane_helpers_round_trip() {
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let plane = Plane(g);
            let a = plane.at(0.7, 0.3);
            let b = plane.at(1.1, 2.0);
            let x = plane.place_left(&a, &b, 0.9, 0.8);
            assert!((plane.dist(&a, &x) - 0.9).abs() < 1e-12);
            assert!((plane.dist(&b, &x) - 0.8).abs() < 1e-12);
            let m = plane.motion(&a, &b, &plane.origin(), &plane.at(1.0, 0.0));
            assert!((plane.dist(&(m * x), &plane.origin()) - 0.9).abs() < 1e-12);
            let back = plane.from_output(plane.to_output(&x));
            assert!((back - x).norm() < 1e-12);
        }
    }

    #[test]
    fn right_angled_torus_is_a_square_grid() {
        let cx = CellComplex::torus_grid(2, 2);
        let data = AngleData::uniform(&cx, Angle::pi_frac(1, 2), Angle::zero(), Geometry::Euclidean);
        let p = solve(&cx, &data);
        assert!((p.area - 1.0).abs() < 1e-12);
        for d in &p.dual_circles {
            assert_eq!(d.radius, 0.0);
        }
        // four unit-normalized squares of side 1/2, circumradius 1/(2√2)
        for c in &p.principal_circles {
            assert!((c.radius - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-9, "{}", c.radius);
        }
        let report = verify_pattern(&p, &data);
        assert!(report.max_residual() < 1e-9, "{report:?}");
        assert!(report.bouquet_ok);
        let svg = render_svg(&p, &RenderOptions::default());
        assert_eq!(svg.matches(r#"class="principal""#).count(), 4);
        assert_eq!(svg.matches(r#"class="cone-point""#).count(), 4);
        assert!(svg.contains(r#"viewBox="0 0 1024 1024""#));
    }

    #[test]
    fn hyperideal_torus_has_equal_radii() {
        let cx = CellComplex::torus_grid(2, 2);
        let data = AngleData::uniform(&cx, Angle::pi_frac(2, 3), Angle::zero(), Geometry::Euclidean);
        let p = solve(&cx, &data);
        let r0 = p.dual_circles[0].radius;
        assert!(r0 > 0.0);
        for d in &p.dual_circles {
            assert!((d.radius - r0).abs() < 1e-9);
        }
        let report = verify_pattern(&p, &data);
        assert!(report.max_residual() < 1e-8, "{report:?}");
        assert!(report.min_dual_gap > 0.0);
    }

    #[test]
    fn perturbed_radius_is_detected() {
        let cx = CellComplex::torus_grid(2, 2);
        let data = AngleData::uniform(&cx, Angle::pi_frac(2, 3), Angle::zero(), Geometry::Euclidean);
        let mut p = solve(&cx, &data);
        p.charts[0].principal.radius += 1e-3;
        let report = verify_pattern(&p, &data);
        assert!(report.theta_error > 1e-4 && report.theta_error < 1e-1, "{}", report.theta_error);
    }

    #[test]
    fn hyperbolic_svg_uses_polylines() {
        let cx = CellComplex::torus_grid(2, 2);
        let data = AngleData::uniform(&cx, Angle::pi_frac(1, 2), Angle::pi_frac(1, 4), Geometry::Hyperbolic);
        let p = solve(&cx, &data);
        let report = verify_pattern(&p, &data);
        assert!(report.cone_angle_error < 1e-7, "{report:?}");
        assert!(report.max_residual() < 1e-7, "{report:?}");
        let svg = render_svg(&p, &RenderOptions::default());
        let poly = svg.lines().find(|l| l.contains(r#"class="principal""#)).unwrap();
        assert!(poly.starts_with("<polygon"));
        assert!(poly.matches(',').count() >= 64);
    }
}

//! Variational solver: the cone complex over the dual graph and the
//! maximization of its total volume under linear angle constraints.
//!
//! The cone complex has one pyramid per vertex `v` of Γ. Its base polygon has
//! one corner per face of Γ around `v` (in rotation order) and its apex is the
//! central vertex, shared by all pyramids. Each pyramid is fan-triangulated
//! into `deg(v) − 2` tetrahedra. Local vertex 0 of every tetrahedron is the
//! apex; local vertices 1, 2, 3 are base corners, 1 being the fan base.
//!
//! Variables are the six interior dihedral angles of every tetrahedron,
//! stored as `x[6 t + slot]`. Linear constraints:
//!
//! * the angles around every edge of the complex sum to its target
//!   (`2π − κ(f)` on the vertical edge over face `f`, `π − θ(e)` on the
//!   horizontal edge crossing `e`, `π` on fan diagonals);
//! * at every ideal vertex of every tetrahedron the three incident angles sum
//!   to `π`;
//! * strict inequalities: angles in `(0, π)`, link sums `< π` at hyperideal
//!   vertices.
//!
//! A strictly feasible start is found by a max-margin linear program followed
//! by analytic centering (Newton on `Σ log slack`), which is deterministic and
//! inherits every symmetry of the constraint polytope. The volume is then
//! maximized by Newton's method restricted to the constraint subspace; the
//! reduced Hessian comes from finite differences of the exact gradient
//! (`−l/2`) along each tetrahedron's own tangent directions.

use crate::complex::CellComplex;
use crate::conditions::{AngleData, Geometry, Verdict};
use crate::hypgeom::{slots_at_vertex, tet::tangent_basis, HyperidealTet, VertexKind, EDGES};
use crate::linalg::null_space;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("vertex {vertex} has degree {degree} < 3")]
    DegreeTooLow { vertex: usize, degree: usize },
    #[error("the cone complex needs a closed surface; double framed instances first")]
    HasBoundary,
    #[error("ideal face set of the complex {complex:?} differs from the accepted set {accepted:?}")]
    MismatchedIdealSet { complex: Vec<usize>, accepted: Vec<usize> },
    #[error("the angle data was rejected by the feasibility conditions ({0})")]
    NotAccepted(String),
    #[error("angle data does not match the complex: {0}")]
    Mismatch(String),
    #[error("no strictly feasible angle assignment (margin {margin:.3e}); tight constraints: {tight:?}")]
    NoInteriorPoint { margin: f64, tight: Vec<String> },
    #[error("tetrahedron {tet} is infeasible: {message}")]
    InfeasibleAngles { tet: usize, message: String },
    #[error("maximization stopped after {iterations} iterations (projected gradient {projected_gradient:.3e}, length spread {length_spread:.3e})")]
    MaxIterations { iterations: usize, projected_gradient: f64, length_spread: f64 },
    #[error("line search failed at iteration {iteration} (projected gradient {projected_gradient:.3e})")]
    LineSearchFailure { iteration: usize, projected_gradient: f64 },
}

impl SolverError {
    /// Variant name, used by the command line front end.
    pub fn name(&self) -> &'static str {
        match self {
            SolverError::DegreeTooLow { .. } => "DegreeTooLow",
            SolverError::HasBoundary => "HasBoundary",
            SolverError::MismatchedIdealSet { .. } => "MismatchedIdealSet",
            SolverError::NotAccepted(_) => "NotAccepted",
            SolverError::Mismatch(_) => "Mismatch",
            SolverError::NoInteriorPoint { .. } => "NoInteriorPoint",
            SolverError::InfeasibleAngles { .. } => "InfeasibleAngles",
            SolverError::MaxIterations { .. } => "MaxIterations",
            SolverError::LineSearchFailure { .. } => "LineSearchFailure",
        }
    }
}

/// Classification of an edge of the cone complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EdgeClass {
    /// Joins the apex to the base vertex over face `face` of Γ.
    Vertical { face: usize },
    /// Horizontal edge crossing edge `edge` of Γ.
    Original { edge: usize },
    /// Fan diagonal inside the pyramid of `vertex`, between base corners at
    /// rotation positions `from` and `to`.
    Diagonal { vertex: usize, from: usize, to: usize },
}

/// One fan-triangulated pyramid, over a vertex of Γ.
#[derive(Clone, Debug, Serialize)]
pub struct Pyramid {
    pub vertex: usize,
    /// Faces of Γ around the vertex, in rotation order.
    pub corners: Vec<usize>,
    /// `base_edges[i]` is the edge of Γ separating corners `i` and `i + 1`.
    pub base_edges: Vec<usize>,
    /// Outgoing half-edges of the vertex in rotation order; `half_edges[i]`
    /// runs along `base_edges[i]`.
    pub half_edges: Vec<usize>,
    /// Rotation position of the fan base corner.
    pub fan_base: usize,
    pub tets: Vec<usize>,
}

/// One tetrahedron of the complex: apex plus three base corners.
#[derive(Clone, Debug, Serialize)]
pub struct ConeTet {
    pub pyramid: usize,
    /// Faces of Γ at local vertices 1, 2, 3.
    pub faces: [usize; 3],
    /// Rotation positions of local vertices 1, 2, 3 in the pyramid.
    pub positions: [usize; 3],
    /// Global edge of each local slot.
    pub edges: [usize; 6],
    pub kinds: [VertexKind; 4],
}

/// The fan-triangulated cone complex over the dual graph of Γ.
#[derive(Clone, Debug, Serialize)]
pub struct TetComplex {
    pub geometry: Geometry,
    pub ideal_faces: BTreeSet<usize>,
    pub pyramids: Vec<Pyramid>,
    pub tets: Vec<ConeTet>,
    pub edges: Vec<EdgeClass>,
    /// For every edge, the incident `(tet, slot)` pairs.
    pub incidence: Vec<Vec<(usize, usize)>>,
    pub num_faces: usize,
    pub num_gamma_edges: usize,
}

/// Options for building the cone complex.
#[derive(Clone, Copy, Debug, Default)]
pub struct FanOptions {
    /// Rotates the fan base of every pyramid this many positions past the
    /// corner with the lowest face id.
    pub rotation: usize,
}

impl TetComplex {
    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_vars(&self) -> usize {
        6 * self.tets.len()
    }

    pub fn vertical_edge(&self, face: usize) -> usize {
        face
    }

    pub fn original_edge(&self, edge: usize) -> usize {
        self.num_faces + edge
    }

    pub fn apex_kind(&self) -> VertexKind {
        match self.geometry {
            Geometry::Euclidean => VertexKind::Ideal,
            Geometry::Hyperbolic => VertexKind::Hyperideal,
        }
    }
}

/// Builds the cone complex over a closed complex with ideal face set `ideal`.
pub fn build_tet_complex(
    cx: &CellComplex,
    ideal: &BTreeSet<usize>,
    geometry: Geometry,
    fan: FanOptions,
) -> Result<TetComplex, SolverError> {
    if cx.has_boundary() {
        return Err(SolverError::HasBoundary);
    }
    let nf = cx.num_faces();
    let ne = cx.num_edges();
    if let Some(&f) = ideal.iter().find(|&&f| f >= nf) {
        return Err(SolverError::Mismatch(format!("ideal face {f} out of range")));
    }
    let apex = match geometry {
        Geometry::Euclidean => VertexKind::Ideal,
        Geometry::Hyperbolic => VertexKind::Hyperideal,
    };
    let kind_of = |f: usize| if ideal.contains(&f) { VertexKind::Ideal } else { VertexKind::Hyperideal };

    let mut edges: Vec<EdgeClass> = (0..nf).map(|face| EdgeClass::Vertical { face }).collect();
    edges.extend((0..ne).map(|edge| EdgeClass::Original { edge }));
    let mut pyramids = Vec::with_capacity(cx.num_vertices());
    let mut tets = Vec::new();

    for v in 0..cx.num_vertices() {
        let out = cx.outgoing(v);
        let d = out.len();
        if d < 3 {
            return Err(SolverError::DegreeTooLow { vertex: v, degree: d });
        }
        let corners: Vec<usize> = out.iter().map(|&g| cx.face_of(g)).collect();
        // Corner i is the face to the left of g_i; g_{i+1} = next(twin(g_i))
        // lies in the face to the right of g_i, so g_i separates corners i
        // and i + 1.
        let base_edges: Vec<usize> = out.iter().map(|&g| cx.edge_of(g)).collect();
        let lowest = (0..d).min_by_key(|&i| (corners[i], i)).unwrap();
        let b = (lowest + fan.rotation) % d;
        let pos = |k: usize| (b + k) % d;

        let mut diag = vec![usize::MAX; d];
        for j in 2..d - 1 {
            diag[j] = edges.len();
            edges.push(EdgeClass::Diagonal { vertex: v, from: pos(0), to: pos(j) });
        }
        let mut ptets = Vec::with_capacity(d - 2);
        for i in 1..d - 1 {
            let positions = [pos(0), pos(i), pos(i + 1)];
            let faces = positions.map(|p| corners[p]);
            let slot12 = if i == 1 { nf + base_edges[pos(0)] } else { diag[i] };
            let slot13 = if i == d - 2 { nf + base_edges[pos(d - 1)] } else { diag[i + 1] };
            let slot23 = nf + base_edges[pos(i)];
            let tet_edges = [faces[0], faces[1], faces[2], slot12, slot13, slot23];
            let kinds = [apex, kind_of(faces[0]), kind_of(faces[1]), kind_of(faces[2])];
            ptets.push(tets.len());
            tets.push(ConeTet { pyramid: v, faces, positions, edges: tet_edges, kinds });
        }
        pyramids.push(Pyramid { vertex: v, corners, base_edges, half_edges: out.to_vec(), fan_base: b, tets: ptets });
    }

    let mut incidence = vec![Vec::new(); edges.len()];
    for (t, tet) in tets.iter().enumerate() {
        for (s, &e) in tet.edges.iter().enumerate() {
            incidence[e].push((t, s));
        }
    }
    Ok(TetComplex {
        geometry,
        ideal_faces: ideal.clone(),
        pyramids,
        tets,
        edges,
        incidence,
        num_faces: nf,
        num_gamma_edges: ne,
    })
}

/// Target sum of interior angles around every edge of the cone complex.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeTargets {
    pub sums: Vec<f64>,
}

/// Edge targets for accepted angle data; `verdict` must be the checker's
/// verdict for the same data and its ideal set must match the complex.
pub fn target_edge_sums(tc: &TetComplex, data: &AngleData, verdict: &Verdict) -> Result<EdgeTargets, SolverError> {
    let accepted = match verdict {
        Verdict::Accepted { ideal_faces, .. } => ideal_faces,
        Verdict::Rejected { reason, .. } => return Err(SolverError::NotAccepted(reason.name().to_string())),
    };
    if accepted != &tc.ideal_faces {
        return Err(SolverError::MismatchedIdealSet {
            complex: tc.ideal_faces.iter().copied().collect(),
            accepted: accepted.iter().copied().collect(),
        });
    }
    targets_unchecked(tc, data)
}

/// Edge targets without consulting a verdict.
pub fn targets_unchecked(tc: &TetComplex, data: &AngleData) -> Result<EdgeTargets, SolverError> {
    if data.theta.len() != tc.num_gamma_edges || data.kappa.len() != tc.num_faces {
        return Err(SolverError::Mismatch(format!(
            "expected {} edge angles and {} curvatures, got {} and {}",
            tc.num_gamma_edges,
            tc.num_faces,
            data.theta.len(),
            data.kappa.len()
        )));
    }
    let sums = tc
        .edges
        .iter()
        .map(|e| match *e {
            EdgeClass::Vertical { face } => 2.0 * PI - data.kappa[face].value(),
            EdgeClass::Original { edge } => PI - data.theta[edge].value(),
            EdgeClass::Diagonal { .. } => PI,
        })
        .collect();
    Ok(EdgeTargets { sums })
}

/// Interior dihedral angles of every tetrahedron.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AngleAssignment {
    pub angles: Vec<[f64; 6]>,
}

impl AngleAssignment {
    pub fn from_vector(x: &DVector<f64>) -> Self {
        AngleAssignment { angles: x.as_slice().chunks(6).map(|c| std::array::from_fn(|i| c[i])).collect() }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(6 * self.angles.len(), self.angles.iter().flat_map(|a| a.iter().copied()))
    }

    pub fn max_abs_diff(&self, other: &AngleAssignment) -> f64 {
        self.angles
            .iter()
            .zip(&other.angles)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// A strict linear inequality `Σ coeffs · x < bound`, stored as its slack.
#[derive(Clone, Debug)]
struct Inequality {
    terms: Vec<(usize, f64)>,
    offset: f64,
    label: String,
}

impl Inequality {
    fn slack(&self, x: &DVector<f64>) -> f64 {
        self.offset + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }
}

/// The linear part of the problem: equalities `A x = b` (independent rows
/// only), a basis `Z` of their null space and the strict inequalities.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub z: DMatrix<f64>,
    pinv: DMatrix<f64>,
    ineq: Vec<Inequality>,
    labels: Vec<String>,
    /// Largest violation of the rows dropped as linearly dependent.
    pub dependent_residual: f64,
    /// Per-tet index of the link row of each local vertex, in the full row set.
    pub link_rows: Vec<[Option<usize>; 4]>,
    full_a: DMatrix<f64>,
    full_b: DVector<f64>,
    full_pinv: DMatrix<f64>,
}

impl ConstraintSystem {
    pub fn new(tc: &TetComplex, targets: &EdgeTargets) -> Result<Self, SolverError> {
        let n = tc.num_vars();
        if targets.sums.len() != tc.edges.len() {
            return Err(SolverError::Mismatch(format!(
                "expected {} edge targets, got {}",
                tc.edges.len(),
                targets.sums.len()
            )));
        }
        let mut rows: Vec<(Vec<usize>, f64, String)> = Vec::new();
        for (e, inc) in tc.incidence.iter().enumerate() {
            rows.push((inc.iter().map(|&(t, s)| 6 * t + s).collect(), targets.sums[e], format!("edge {e} sum")));
        }
        let mut link_rows = vec![[None; 4]; tc.num_tets()];
        let mut ineq = Vec::new();
        for (t, tet) in tc.tets.iter().enumerate() {
            for (v, kind) in tet.kinds.iter().enumerate() {
                let vars: Vec<usize> = slots_at_vertex(v).iter().map(|&s| 6 * t + s).collect();
                match kind {
                    VertexKind::Ideal => {
                        link_rows[t][v] = Some(rows.len());
                        rows.push((vars, PI, format!("tet {t} vertex {v} ideal link")));
                    }
                    VertexKind::Hyperideal => ineq.push(Inequality {
                        terms: vars.iter().map(|&i| (i, -1.0)).collect(),
                        offset: PI,
                        label: format!("tet {t} vertex {v} hyperideal link"),
                    }),
                }
            }
            for s in 0..6 {
                let i = 6 * t + s;
                ineq.push(Inequality { terms: vec![(i, 1.0)], offset: 0.0, label: format!("tet {t} slot {s} > 0") });
                ineq.push(Inequality { terms: vec![(i, -1.0)], offset: PI, label: format!("tet {t} slot {s} < π") });
            }
        }
        let mut full_a = DMatrix::zeros(rows.len(), n);
        let mut full_b = DVector::zeros(rows.len());
        for (r, (vars, rhs, _)) in rows.iter().enumerate() {
            for &i in vars {
                full_a[(r, i)] += 1.0;
            }
            full_b[r] = *rhs;
        }
        // Greedy selection of independent rows (Gram–Schmidt on the rows).
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let mut keep = Vec::new();
        for r in 0..rows.len() {
            let mut v: DVector<f64> = full_a.row(r).transpose();
            let norm0 = v.norm();
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&v);
                    v -= q * c;
                }
            }
            let norm = v.norm();
            if norm > 1e-9 * norm0.max(1.0) {
                basis.push(v / norm);
                keep.push(r);
            }
        }
        let mut a = DMatrix::zeros(keep.len(), n);
        let mut b = DVector::zeros(keep.len());
        let mut labels = Vec::with_capacity(keep.len());
        for (k, &r) in keep.iter().enumerate() {
            a.set_row(k, &full_a.row(r));
            b[k] = full_b[r];
            labels.push(rows[r].2.clone());
        }
        let pinv = if a.nrows() == 0 {
            DMatrix::zeros(n, 0)
        } else {
            a.clone().pseudo_inverse(1e-12).map_err(|e| SolverError::Mismatch(e.to_string()))?
        };
        let xls = &pinv * &b;
        let dependent_residual = (&full_a * &xls - &full_b).amax();
        let z = null_space(&a, 1e-11);
        let full_pinv = if full_a.nrows() == 0 {
            DMatrix::zeros(n, 0)
        } else {
            full_a.clone().pseudo_inverse(1e-10).map_err(|e| SolverError::Mismatch(e.to_string()))?
        };
        Ok(ConstraintSystem { a, b, z, pinv, ineq, labels, dependent_residual, link_rows, full_a, full_b, full_pinv })
    }

    /// Orthogonal projection onto the affine subspace `A x = b`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.a.nrows() == 0 {
            return x.clone();
        }
        let r = &self.a * x - &self.b;
        x - &self.pinv * r
    }

    /// Largest violation over all equality rows, including dependent ones.
    pub fn equality_residual(&self, x: &DVector<f64>) -> f64 {
        (&self.full_a * x - &self.full_b).amax()
    }

    /// Smallest slack of the strict inequalities.
    pub fn min_slack(&self, x: &DVector<f64>) -> (f64, usize) {
        self.ineq
            .iter()
            .enumerate()
            .map(|(i, q)| (q.slack(x), i))
            .fold((f64::INFINITY, 0), |acc, s| if s.0 < acc.0 { s } else { acc })
    }

    fn slack_label(&self, i: usize) -> &str {
        &self.ineq[i].label
    }

    /// Multipliers `λ` with `g ≈ Aᵀλ` over the full row set (least norm),
    /// so that every ideal link row has its own multiplier.
    pub fn multipliers(&self, g: &DVector<f64>) -> DVector<f64> {
        self.full_pinv.transpose() * g
    }

    pub fn row_labels(&self) -> &[String] {
        &self.labels
    }
}

fn tet_angles(x: &DVector<f64>, t: usize) -> [f64; 6] {
    std::array::from_fn(|s| x[6 * t + s])
}

/// Builds every tetrahedron of the assignment `x`.
pub fn build_tets(tc: &TetComplex, x: &DVector<f64>) -> Result<Vec<HyperidealTet>, SolverError> {
    (0..tc.num_tets())
        .into_par_iter()
        .map(|t| {
            HyperidealTet::from_angles(tet_angles(x, t), tc.tets[t].kinds)
                .map_err(|e| SolverError::InfeasibleAngles { tet: t, message: e.to_string() })
        })
        .collect()
}

/// Total volume of the complex.
pub fn total_volume(tc: &TetComplex, theta: &AngleAssignment) -> Result<f64, SolverError> {
    let tets = build_tets(tc, &theta.to_vector())?;
    Ok(sum_volumes(&tets))
}

fn sum_volumes(tets: &[HyperidealTet]) -> f64 {
    let vols: Vec<f64> = tets.par_iter().map(|t| t.truncated_volume()).collect();
    vols.iter().sum()
}

/// Gradient of the total volume with respect to the interior angles,
/// `−l/2` per (tet, slot), lengths measured with canonical horospheres.
pub fn volume_gradient(tc: &TetComplex, theta: &AngleAssignment) -> Result<Vec<[f64; 6]>, SolverError> {
    let tets = build_tets(tc, &theta.to_vector())?;
    Ok(tets.iter().map(|t| t.volume_gradient_interior()).collect())
}

fn gradient_vector(tets: &[HyperidealTet]) -> DVector<f64> {
    DVector::from_iterator(6 * tets.len(), tets.iter().flat_map(|t| t.volume_gradient_interior()))
}

/// Options of the phase-one search and the maximization.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol_grad: f64,
    pub tol_len: f64,
    pub max_iter: usize,
    /// Initial weight of the logarithmic barrier on the strict inequalities;
    /// it is divided by 100 after every iteration and dropped below 1e-16.
    pub barrier: f64,
    /// Finite-difference step of the Hessian.
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol_grad: 1e-9, tol_len: 1e-7, max_iter: 200, barrier: 1e-8, fd_step: 1e-5 }
    }
}

/// Finds a strictly feasible angle assignment: the analytic center of the
/// linear feasibility polytope.
pub fn initial_feasible_point(tc: &TetComplex, targets: &EdgeTargets) -> Result<AngleAssignment, SolverError> {
    let sys = ConstraintSystem::new(tc, targets)?;
    let x = max_margin_point(&sys)?;
    let x = analytic_center(&sys, x);
    check_tets(tc, &x)?;
    Ok(AngleAssignment::from_vector(&x))
}

fn check_tets(tc: &TetComplex, x: &DVector<f64>) -> Result<(), SolverError> {
    build_tets(tc, x).map(|_| ())
}

fn no_interior(sys: &ConstraintSystem, margin: f64, x: Option<&DVector<f64>>) -> SolverError {
    let tight = match x {
        Some(x) => sys
            .ineq
            .iter()
            .filter(|q| q.slack(x) <= margin + 1e-9)
            .map(|q| q.label.clone())
            .take(32)
            .collect(),
        None => vec!["equality constraints are inconsistent".to_string()],
    };
    SolverError::NoInteriorPoint { margin, tight }
}

/// Maximizes the common margin `t` of all strict inequalities subject to
/// the equalities.
fn max_margin_point(sys: &ConstraintSystem) -> Result<DVector<f64>, SolverError> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let n = sys.a.ncols();
    if sys.dependent_residual > 1e-8 {
        return Err(no_interior(sys, f64::NEG_INFINITY, None));
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, PI))).collect();
    let t = lp.add_var(1.0, (-PI, PI));
    for r in 0..sys.a.nrows() {
        let terms: Vec<_> = (0..n).filter(|&i| sys.a[(r, i)] != 0.0).map(|i| (vars[i], sys.a[(r, i)])).collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, sys.b[r]);
    }
    for q in &sys.ineq {
        // offset + Σ c x ≥ t
        let mut terms: Vec<_> = q.terms.iter().map(|&(i, c)| (vars[i], c)).collect();
        terms.push((t, -1.0));
        lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, -q.offset);
    }
    let sol = match lp.solve().map(|o| o.into_solution()) {
        Ok(Ok(s)) => s,
        _ => return Err(no_interior(sys, f64::NEG_INFINITY, None)),
    };
    let x = sys.project(&DVector::from_iterator(n, vars.iter().map(|&v| sol.var_value(v))));
    let (margin, _) = sys.min_slack(&x);
    if margin <= 1e-9 {
        return Err(no_interior(sys, margin, Some(&x)));
    }
    Ok(x)
}

/// Newton's method on `Σ log slack` over the affine subspace, started from a
/// strictly feasible point. Damped steps `1/(1+λ)` keep every iterate
/// strictly feasible (the barrier is self-concordant).
fn analytic_center(sys: &ConstraintSystem, mut x: DVector<f64>) -> DVector<f64> {
    let k = sys.z.ncols();
    if k == 0 {
        return x;
    }
    let n = x.len();
    for _ in 0..200 {
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for q in &sys.ineq {
            let s = q.slack(&x);
            for &(i, ci) in &q.terms {
                grad[i] += ci / s;
                for &(j, cj) in &q.terms {
                    hess[(i, j)] += ci * cj / (s * s);
                }
            }
        }
        let gy = sys.z.transpose() * grad;
        let hy = sys.z.transpose() * hess * &sys.z;
        let Some(chol) = hy.cholesky() else { break };
        let dy = chol.solve(&gy);
        let lambda = gy.dot(&dy).max(0.0).sqrt();
        let step = &sys.z * dy / (1.0 + lambda);
        let candidate = sys.project(&(&x + step));
        if sys.min_slack(&candidate).0 <= 0.0 {
            break;
        }
        x = candidate;
        if lambda < 1e-12 {
            break;
        }
    }
    x
}

/// A random strictly feasible point: a few hops from the analytic center
/// along random directions of the constraint subspace, each a random
/// fraction of the way to the boundary.
pub fn random_feasible_point(
    tc: &TetComplex,
    targets: &EdgeTargets,
    seed: u64,
) -> Result<AngleAssignment, SolverError> {
    let sys = ConstraintSystem::new(tc, targets)?;
    let center = analytic_center(&sys, max_margin_point(&sys)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = sys.z.ncols();
    let mut x = center;
    if k == 0 {
        return Ok(AngleAssignment::from_vector(&x));
    }
    for _ in 0..3 {
        let y = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let dir = &sys.z * y;
        let dir = &dir / dir.norm();
        let mut amax = f64::INFINITY;
        for q in &sys.ineq {
            let rate: f64 = q.terms.iter().map(|&(i, c)| c * dir[i]).sum();
            if rate < 0.0 {
                amax = amax.min(q.slack(&x) / -rate);
            }
        }
        let mut alpha = rng.gen_range(0.1..0.8) * amax;
        loop {
            let cand = sys.project(&(&x + &dir * alpha));
            if sys.min_slack(&cand).0 > 0.0 && check_tets(tc, &cand).is_ok() {
                x = cand;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                break;
            }
        }
    }
    Ok(AngleAssignment::from_vector(&x))
}

/// One row of the iteration trace.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub volume: f64,
    pub projected_gradient: f64,
    pub length_spread: f64,
    pub step: f64,
    pub newton: bool,
    pub barrier: f64,
}

/// Residuals of an angle assignment.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Residuals {
    /// Norm of the gradient projected onto the constraint null space.
    pub projected_gradient: f64,
    /// Largest disagreement between the lengths that incident tetrahedra
    /// assign to a common edge (after the horosphere shifts given by the
    /// ideal-link multipliers).
    pub length_spread: f64,
    /// Largest violation of an equality constraint.
    pub equality: f64,
    /// Smallest slack of the strict inequalities, and its constraint.
    pub min_slack: f64,
    pub min_slack_constraint: String,
    /// Per edge of the complex, the agreed length.
    pub edge_lengths: Vec<f64>,
}

/// Outcome of the maximization.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub volume: f64,
    pub residuals: Residuals,
    /// Iterations where the reduced Hessian failed to factor as negative
    /// definite and a projected-gradient step was taken instead.
    pub gradient_fallbacks: usize,
    /// A near-degenerate constraint when the iterate approaches the boundary
    /// of the polytope (a circle shrinking to a point or disappearing).
    pub boundary_warning: Option<String>,
    pub trace: Vec<TraceEntry>,
}

/// Computes the residuals of `x` given its tetrahedra.
fn residuals(tc: &TetComplex, sys: &ConstraintSystem, x: &DVector<f64>, tets: &[HyperidealTet]) -> Residuals {
    let g = gradient_vector(tets);
    let pg = sys.z.transpose() * &g;
    let lambda = sys.multipliers(&g);
    let mut edge_lengths = vec![0.0; tc.edges.len()];
    let mut spread: f64 = 0.0;
    for (e, inc) in tc.incidence.iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &(t, s) in inc {
            let (a, b) = EDGES[s];
            let mut l = tets[t].edge_length(s);
            for v in [a, b] {
                if let Some(row) = sys.link_rows[t][v] {
                    l += 2.0 * lambda[row];
                }
            }
            lo = lo.min(l);
            hi = hi.max(l);
            sum += l;
        }
        spread = spread.max(hi - lo);
        edge_lengths[e] = sum / inc.len() as f64;
    }
    let (min_slack, idx) = sys.min_slack(x);
    Residuals {
        projected_gradient: pg.norm(),
        length_spread: spread,
        equality: sys.equality_residual(x),
        min_slack,
        min_slack_constraint: sys.slack_label(idx).to_string(),
        edge_lengths,
    }
}

/// Evaluates residuals of an arbitrary feasible assignment.
pub fn assignment_residuals(
    tc: &TetComplex,
    targets: &EdgeTargets,
    theta: &AngleAssignment,
) -> Result<Residuals, SolverError> {
    let sys = ConstraintSystem::new(tc, targets)?;
    let x = theta.to_vector();
    let tets = build_tets(tc, &x)?;
    Ok(residuals(tc, &sys, &x, &tets))
}

/// Reduced Hessian `Zᵀ B Z` of the total volume, with `B` assembled from
/// per-tetrahedron finite differences of the exact gradient along the
/// tetrahedron's tangent directions.
fn reduced_hessian(tc: &TetComplex, sys: &ConstraintSystem, x: &DVector<f64>, h0: f64) -> DMatrix<f64> {
    let k = sys.z.ncols();
    let blocks: Vec<DMatrix<f64>> = (0..tc.num_tets())
        .into_par_iter()
        .map(|t| {
            let kinds = tc.tets[t].kinds;
            let basis = tangent_basis(&kinds);
            let angles = tet_angles(x, t);
            let m = basis.ncols();
            let mut ht = DMatrix::zeros(m, m);
            for j in 0..m {
                let mut h = h0;
                let col = loop {
                    let shifted = |sign: f64| {
                        let a: [f64; 6] = std::array::from_fn(|s| angles[s] + sign * h * basis[(s, j)]);
                        HyperidealTet::from_angles(a, kinds).map(|tt| tt.volume_gradient_interior())
                    };
                    match (shifted(1.0), shifted(-1.0)) {
                        (Ok(gp), Ok(gm)) => {
                            let d: DVector<f64> = DVector::from_fn(6, |s, _| (gp[s] - gm[s]) / (2.0 * h));
                            break basis.transpose() * d;
                        }
                        _ if h > 1e-12 => h *= 0.1,
                        _ => break DVector::zeros(m),
                    }
                };
                ht.set_column(j, &col);
            }
            let ht = (&ht + ht.transpose()) * 0.5;
            let zt = DMatrix::from_fn(6, k, |s, c| sys.z[(6 * t + s, c)]);
            let proj = basis.transpose() * &zt;
            proj.transpose() * ht * proj
        })
        .collect();
    let mut out = DMatrix::zeros(k, k);
    for b in blocks {
        out += b;
    }
    out
}

fn barrier_terms(sys: &ConstraintSystem, x: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let mut val = 0.0;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for q in &sys.ineq {
        let s = q.slack(x);
        val += s.ln();
        for &(i, ci) in &q.terms {
            grad[i] += ci / s;
            for &(j, cj) in &q.terms {
                hess[(i, j)] -= ci * cj / (s * s);
            }
        }
    }
    (val, grad, hess)
}

/// Maximizes the total volume over the feasible angle assignments, starting
/// from the strictly feasible `start`.
///
/// On `MaxIterations` or `LineSearchFailure` the best iterate and its
/// residuals are still returned alongside the error.
pub fn maximize(
    tc: &TetComplex,
    targets: &EdgeTargets,
    start: &AngleAssignment,
    opts: &SolverOptions,
) -> Result<(AngleAssignment, SolveReport), (SolverError, Option<Box<(AngleAssignment, SolveReport)>>)> {
    let sys = ConstraintSystem::new(tc, targets).map_err(|e| (e, None))?;
    let mut x = sys.project(&start.to_vector());
    if sys.min_slack(&x).0 <= 0.0 {
        let (s, i) = sys.min_slack(&x);
        return Err((SolverError::NoInteriorPoint { margin: s, tight: vec![sys.slack_label(i).to_string()] }, None));
    }
    let mut tets = build_tets(tc, &x).map_err(|e| (e, None))?;
    let grad_tol = opts.tol_grad * (tc.num_tets() as f64).sqrt().max(1.0);
    let mut mu = opts.barrier;
    let mut trace = Vec::new();
    let mut fallbacks = 0;
    let mut step_taken = 0.0;
    let mut newton_used = false;

    let finish = |x: &DVector<f64>, tets: &[HyperidealTet], trace: Vec<TraceEntry>, converged: bool, it: usize, fallbacks: usize| {
        let res = residuals(tc, &sys, x, tets);
        let warning = if res.min_slack < 1e-6 {
            Some(format!("{} has slack {:.3e}", res.min_slack_constraint, res.min_slack))
        } else {
            None
        };
        (
            AngleAssignment::from_vector(x),
            SolveReport {
                converged,
                iterations: it,
                volume: sum_volumes(tets),
                residuals: res,
                gradient_fallbacks: fallbacks,
                boundary_warning: warning,
                trace,
            },
        )
    };

    for it in 0..=opts.max_iter {
        let volume = sum_volumes(&tets);
        let g = gradient_vector(&tets);
        let res = residuals(tc, &sys, &x, &tets);
        trace.push(TraceEntry {
            iteration: it,
            volume,
            projected_gradient: res.projected_gradient,
            length_spread: res.length_spread,
            step: step_taken,
            newton: newton_used,
            barrier: mu,
        });
        if mu == 0.0 && res.projected_gradient < grad_tol && res.length_spread < opts.tol_len {
            return Ok(finish(&x, &tets, trace, true, it, fallbacks));
        }
        if it == opts.max_iter {
            let err = SolverError::MaxIterations {
                iterations: it,
                projected_gradient: res.projected_gradient,
                length_spread: res.length_spread,
            };
            return Err((err, Some(Box::new(finish(&x, &tets, trace, false, it, fallbacks)))));
        }

        // Objective F = V + μ Σ log slack.
        let mut hred = reduced_hessian(tc, &sys, &x, opts.fd_step);
        let mut full_grad = g.clone();
        let mut f0 = volume;
        if mu > 0.0 {
            let (bv, bg, bh) = barrier_terms(&sys, &x);
            f0 += mu * bv;
            full_grad += bg * mu;
            hred += sys.z.transpose() * bh * &sys.z * mu;
        }
        let gy = sys.z.transpose() * &full_grad;
        let neg = -&hred;
        let (dy, is_newton) = match neg.clone().cholesky() {
            Some(ch) => (ch.solve(&gy), true),
            None => {
                fallbacks += 1;
                log::warn!("reduced Hessian not negative definite at iteration {it}; taking a gradient step");
                (gy.clone(), false)
            }
        };
        let dx = &sys.z * &dy;
        let slope = gy.dot(&dy);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = sys.project(&(&x + &dx * alpha));
            if sys.min_slack(&cand).0 > 0.0 {
                if let Ok(ct) = build_tets(tc, &cand) {
                    let mut f1 = sum_volumes(&ct);
                    if mu > 0.0 {
                        f1 += mu * barrier_terms(&sys, &cand).0;
                    }
                    let noise = 1e-13 * (1.0 + f0.abs());
                    if f1 >= f0 + 1e-4 * alpha * slope || (slope * alpha < noise && f1 >= f0 - noise) {
                        accepted = Some((cand, ct));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((cand, ct)) => {
                x = cand;
                tets = ct;
                step_taken = alpha;
                newton_used = is_newton;
            }
            None => {
                let err = SolverError::LineSearchFailure { iteration: it, projected_gradient: res.projected_gradient };
                return Err((err, Some(Box::new(finish(&x, &tets, trace, false, it, fallbacks)))));
            }
        }
        mu = if mu * 0.01 < 1e-16 { 0.0 } else { mu * 0.01 };
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use crate::complex::fixtures as examples;
    use crate::conditions::{check_conditions, CheckOptions};

    const CATALAN: f64 = 0.915_965_594_177_219;

    fn uniform(cx: &CellComplex, theta: Angle, kappa: Angle, geometry: Geometry) -> AngleData {
        AngleData::uniform(cx, theta, kappa, geometry)
    }

    fn setup(cx: &CellComplex, data: &AngleData) -> (TetComplex, EdgeTargets) {
        let verdict = check_conditions(cx, data, &CheckOptions::default()).unwrap();
        let ideal = verdict.ideal_faces().expect("accepted").clone();
        let tc = build_tet_complex(cx, &ideal, data.geometry, FanOptions::default()).unwrap();
        let targets = target_edge_sums(&tc, data, &verdict).unwrap();
        (tc, targets)
    }

    #[test]
    fn tet_counts() {
        let torus = CellComplex::torus_grid(2, 2);
        let tc = build_tet_complex(&torus, &BTreeSet::new(), Geometry::Hyperbolic, FanOptions::default()).unwrap();
        assert_eq!(tc.num_tets(), 8);
        assert_eq!(tc.pyramids.len(), 4);
        let k4 = examples::k4();
        let tc = build_tet_complex(&k4, &BTreeSet::new(), Geometry::Hyperbolic, FanOptions::default()).unwrap();
        assert_eq!(tc.num_tets(), 4);
        assert!(!tc.edges.iter().any(|e| matches!(e, EdgeClass::Diagonal { .. })));
        // every vertical edge of K4 is shared by the three pyramids around its face
        for f in 0..4 {
            assert_eq!(tc.incidence[tc.vertical_edge(f)].len(), 3);
        }
    }

    #[test]
    fn degree_two_vertex_is_rejected() {
        // Two triangles glued along their boundary: a sphere with degree-2 vertices.
        let cx = CellComplex::from_faces(3, &[vec![0, 1, 2], vec![0, 2, 1]]).unwrap();
        let err = build_tet_complex(&cx, &BTreeSet::new(), Geometry::Hyperbolic, FanOptions::default()).unwrap_err();
        assert!(matches!(err, SolverError::DegreeTooLow { degree: 2, .. }));
    }

    #[test]
    fn targets_follow_the_angle_data() {
        let torus = CellComplex::torus_grid(2, 2);
        let data = uniform(&torus, Angle::pi_frac(1, 2), Angle::zero(), Geometry::Euclidean);
        let (tc, targets) = setup(&torus, &data);
        for (e, class) in tc.edges.iter().enumerate() {
            let want = match class {
                EdgeClass::Vertical { .. } => 2.0 * PI,
                EdgeClass::Original { .. } => PI / 2.0,
                EdgeClass::Diagonal { .. } => PI,
            };
            assert!((targets.sums[e] - want).abs() < 1e-15);
        }
        // A different ideal set is refused.
        let other = build_tet_complex(&torus, &BTreeSet::new(), Geometry::Euclidean, FanOptions::default()).unwrap();
        let verdict = check_conditions(&torus, &data, &CheckOptions::default()).unwrap();
        assert!(matches!(target_edge_sums(&other, &data, &verdict), Err(SolverError::MismatchedIdealSet { .. })));
    }

    #[test]
    fn regular_ideal_tetrahedra_on_k4() {
        // κ ≡ π and θ ≡ π/3 make every pyramid a regular ideal tetrahedron.
        let k4 = examples::k4();
        let data = uniform(&k4, Angle::pi_frac(1, 3), Angle::pi_frac(1, 1), Geometry::Euclidean);
        let (tc, targets) = setup(&k4, &data);
        assert_eq!(tc.ideal_faces.len(), 4);
        let start = initial_feasible_point(&tc, &targets).unwrap();
        for a in &start.angles {
            for &v in a {
                assert!((v - PI / 3.0).abs() < 1e-12, "{a:?}");
            }
        }
        let v = total_volume(&tc, &start).unwrap();
        assert!((v - 4.0 * 1.014_941_606_409_653_6).abs() < 1e-9, "{v}");
    }

    #[test]
    fn right_angled_torus_is_eight_catalan_pieces() {
        let torus = CellComplex::torus_grid(2, 2);
        let data = uniform(&torus, Angle::pi_frac(1, 2), Angle::zero(), Geometry::Euclidean);
        let (tc, targets) = setup(&torus, &data);
        let start = initial_feasible_point(&tc, &targets).unwrap();
        let (theta, report) = maximize(&tc, &targets, &start, &SolverOptions::default()).unwrap();
        assert!(report.converged);
        assert!(report.residuals.length_spread < 1e-10, "{:?}", report.residuals);
        let tets = build_tets(&tc, &theta.to_vector()).unwrap();
        for t in &tets {
            assert!((t.truncated_volume() - CATALAN).abs() < 1e-9, "{}", t.truncated_volume());
        }
        // the volume never decreases along the trace
        for w in report.trace.windows(2) {
            assert!(w[1].volume >= w[0].volume - 1e-7);
        }
    }

    #[test]
    fn hyperideal_torus_converges_to_congruent_tets() {
        let torus = CellComplex::torus_grid(2, 2);
        let data = uniform(&torus, Angle::pi_frac(2, 3), Angle::zero(), Geometry::Euclidean);
        let (tc, targets) = setup(&torus, &data);
        assert!(tc.ideal_faces.is_empty());
        let start = initial_feasible_point(&tc, &targets).unwrap();
        let (theta, report) = maximize(&tc, &targets, &start, &SolverOptions::default()).unwrap();
        assert!(report.converged, "{report:?}");
        let vols: Vec<f64> = build_tets(&tc, &theta.to_vector()).unwrap().iter().map(|t| t.truncated_volume()).collect();
        for v in &vols {
            assert!((v - vols[0]).abs() < 1e-8, "{vols:?}");
        }
        let other = random_feasible_point(&tc, &targets, 5).unwrap();
        assert!(other.max_abs_diff(&start) > 1e-3);
        let (theta2, _) = maximize(&tc, &targets, &other, &SolverOptions::default()).unwrap();
        assert!(theta.max_abs_diff(&theta2) < 1e-6);
    }

    #[test]
    fn inconsistent_targets_have_no_interior_point() {
        let torus = CellComplex::torus_grid(2, 2);
        let data = uniform(&torus, Angle::pi_frac(2, 3), Angle::zero(), Geometry::Euclidean);
        let (tc, mut targets) = setup(&torus, &data);
        targets.sums[0] += 0.5;
        assert!(matches!(initial_feasible_point(&tc, &targets), Err(SolverError::NoInteriorPoint { .. })));
    }
}

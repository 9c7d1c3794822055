//! Admissible domains and the feasibility conditions on (θ, κ).
//!
//! An admissible domain Ω is assembled from *cells*: whole faces of the
//! working complex, and *pieces* of faces cut out by chords joining corners
//! of a face. Two cells on either side of an edge are either glued (the edge
//! is interior to Ω) or slit (the edge lies twice on ∂Ω). The Euler
//! characteristic is computed on the abstract closure of Ω: corners are
//! linked across glued sides into vertex fans, so that χ = V̂ − Ê + F.
//!
//! For each domain the checker compares Σ_{e⊂∂Ω} θ(e) with
//! (2χ(Ω) − m(Ω) − n(Ω))π − Σ_{f⊂Ω} κ(f). Two independent searches exist:
//!
//! * the default *cut search* enumerates sets of edges and chords whose
//!   θ-length plus π per chord fits under 2π − Σ_{κ<0} κ (no domain with a
//!   longer boundary can violate its bound, since χ(Ω) ≤ 1), and evaluates
//!   the components of the cut surface;
//! * the *brute-force* search grows every connected, conflict-free set of
//!   cells and tries every gluing pattern of its internal edges.
//!
//! Exact rational arithmetic (multiples of π) is used when all inputs are
//! symbolic; otherwise comparisons use a 1e−9 tolerance. The cut search gets
//! slow when the total negative curvature is large (several π) and θ small.

use crate::angle::Angle;
use crate::complex::{CellComplex, ComplexError, ExtendedComplex};
use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

/// Absolute tolerance on radians for inexact inputs.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default number of chords allowed per face.
pub const DEFAULT_CHORD_BUDGET: usize = 2;
/// Default cap on the number of examined domains.
pub const DEFAULT_MAX_DOMAINS: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    #[default]
    Euclidean,
    Hyperbolic,
}

/// How to read the hyperbolic framed condition Σκ > … − Σθ(∂ edges).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FramedReading {
    /// Σκ > 2πχ(Σ) − Σθ, the form obtained by doubling.
    #[default]
    EulerCharacteristic,
    /// Σκ > 2π − Σθ, taken literally.
    Literal,
}

/// Intersection angles, cone curvatures and the boundary data of a problem.
///
/// `theta` is indexed by edges of Γ and `kappa` by faces of Γ. For framed
/// problems the extended angles are given separately: boundary angles are
/// keyed by the boundary vertex of Γ whose circle meets the boundary segment,
/// polygonal angles by the boundary edge of Γ facing the polygon corner.
#[derive(Clone, Debug, Default)]
pub struct AngleData {
    pub theta: Vec<Angle>,
    pub kappa: Vec<Angle>,
    pub geometry: Geometry,
    pub framed: bool,
    pub boundary_angles: BTreeMap<usize, Angle>,
    pub polygonal_angles: BTreeMap<usize, Angle>,
    pub forced_ideal: BTreeSet<usize>,
    pub framed_reading: FramedReading,
}

impl AngleData {
    pub fn uniform(complex: &CellComplex, theta: Angle, kappa: Angle, geometry: Geometry) -> AngleData {
        AngleData {
            theta: vec![theta; complex.num_edges()],
            kappa: vec![kappa; complex.num_faces()],
            geometry,
            ..Default::default()
        }
    }

    /// θ on every edge of Γ′, in Γ′ edge order.
    pub fn extended_theta(&self, x: &ExtendedComplex) -> Result<Vec<Angle>, ComplexError> {
        let mut th = vec![Angle::zero(); x.complex.num_edges()];
        th[..self.theta.len().min(x.base.num_edges())].copy_from_slice(&self.theta[..x.base.num_edges().min(self.theta.len())]);
        for k in 0..x.num_blocks() {
            let v = x.base_vertex_of_spoke[k];
            let e = x.base_edge_of_outer[k];
            th[x.spoke_edges[k]] = *self
                .boundary_angles
                .get(&v)
                .ok_or_else(|| ComplexError::MissingAngle { cell: format!("boundary angle at vertex {v}") })?;
            th[x.outer_edges[k]] = *self
                .polygonal_angles
                .get(&e)
                .ok_or_else(|| ComplexError::MissingAngle { cell: format!("polygonal angle at edge {e}") })?;
        }
        Ok(th)
    }
}

/// Which family of conditions applies: closed, geodesic boundary or framed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Closed surface.
    Closed,
    /// Surface with geodesic boundary, conditions on (Σ, Γ).
    GeodesicBoundary,
    /// Framed pattern, conditions on (Σ, Γ′).
    Framed,
}

/// One step of a boundary walk of a domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryStep {
    Edge { edge: usize, half_edge: usize },
    Chord { face: usize, from: usize, to: usize },
    SurfaceBoundary { edge: usize },
}

/// A piece of a face cut out by chords, given by its corners (vertex ids
/// in face order).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub face: usize,
    pub corners: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleDomain {
    pub contained_faces: Vec<usize>,
    pub pieces: Vec<Piece>,
    pub boundary_walks: Vec<Vec<BoundaryStep>>,
    pub euler_char: i64,
    pub m: usize,
    pub n: usize,
    /// Multiplicity of each edge in ∂Ω (edges with multiplicity 0 omitted).
    pub edge_multiplicity: BTreeMap<usize, u8>,
    /// Two chords of one face share an endpoint.
    pub shared_chord_endpoint: bool,
}

impl AdmissibleDomain {
    fn key(&self) -> (Vec<usize>, Vec<(usize, u8)>, i64, usize, usize) {
        (
            self.contained_faces.clone(),
            self.edge_multiplicity.iter().map(|(a, b)| (*a, *b)).collect(),
            self.euler_char,
            self.m,
            self.n,
        )
    }

    pub fn is_single_face(&self) -> bool {
        self.contained_faces.len() == 1 && self.pieces.is_empty() && self.m == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rejection {
    GaussBonnetMismatch { curvature_sum: f64, bound: f64, relation: String },
    DomainViolation { domain: AdmissibleDomain, lhs: f64, rhs: f64 },
    ThetaOutOfRange { edge: usize, value: f64 },
    KappaOutOfRange { face: usize, value: f64 },
    DegenerateFace { face: usize, sides: usize },
    ForcedIdealNotTight { face: usize, slack: f64 },
}

impl Rejection {
    pub fn name(&self) -> &'static str {
        match self {
            Rejection::GaussBonnetMismatch { .. } => "GaussBonnetMismatch",
            Rejection::DomainViolation { .. } => "DomainViolation",
            Rejection::ThetaOutOfRange { .. } => "ThetaOutOfRange",
            Rejection::KappaOutOfRange { .. } => "KappaOutOfRange",
            Rejection::DegenerateFace { .. } => "DegenerateFace",
            Rejection::ForcedIdealNotTight { .. } => "ForcedIdealNotTight",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub domains_examined: usize,
    pub cell_sets_examined: usize,
    pub shared_chord_endpoint_domains: usize,
    pub chord_budget: usize,
    pub pruned: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accepted { ideal_faces: BTreeSet<usize>, report: CheckReport },
    Rejected { reason: Rejection, report: CheckReport },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }

    pub fn ideal_faces(&self) -> Option<&BTreeSet<usize>> {
        match self {
            Verdict::Accepted { ideal_faces, .. } => Some(ideal_faces),
            _ => None,
        }
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Verdict::Rejected { reason, .. } => Some(reason),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConditionsError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("domain budget exceeded after {count} domains")]
    BudgetExceeded { count: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("angle data does not match the complex: {0}")]
    Mismatch(String),
}

/// Options for the enumerator and checker.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub chord_budget: usize,
    pub max_domains: usize,
    pub tol: f64,
    /// Disable the right-hand-side pruning and enumerate every slit pattern.
    pub brute_force: bool,
    /// Only test disks with at most one chord (χ ≥ 1, m ≤ 1).
    pub restricted: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            chord_budget: DEFAULT_CHORD_BUDGET,
            max_domains: DEFAULT_MAX_DOMAINS,
            tol: DEFAULT_TOL,
            brute_force: false,
            restricted: false,
        }
    }
}

/// Consistency check at an ideal dual circle: the angles of the circles
/// through the cone point sum to 2π − κ.
pub fn bouquet_check(angles: &[f64], kappa: f64) -> bool {
    let s: f64 = angles.iter().sum();
    (s - (2.0 * PI - kappa)).abs() <= 1e-9
}

// ---------------------------------------------------------------------------
// Problem setting

/// The working complex with per-edge and per-face weights for one mode.
struct Setting {
    mode: Mode,
    cx: CellComplex,
    theta: Vec<Angle>,
    kappa: Vec<Angle>,
    /// Faces of Γ (equality allowed); false for collar faces of Γ′.
    base_face: Vec<bool>,
    /// Equality is required (not forbidden) on the domain of all cells.
    all_faces_equality: bool,
}

impl Setting {
    fn new(cx: &CellComplex, data: &AngleData) -> Result<Setting, ConditionsError> {
        if data.kappa.len() != cx.num_faces() {
            return Err(ConditionsError::Mismatch(format!(
                "{} curvatures for {} faces",
                data.kappa.len(),
                cx.num_faces()
            )));
        }
        if data.theta.len() != cx.num_edges() {
            return Err(ConditionsError::Mismatch(format!("{} angles for {} edges", data.theta.len(), cx.num_edges())));
        }
        if !cx.has_boundary() {
            if data.framed {
                return Err(ConditionsError::Mismatch("framed data on a closed surface".into()));
            }
            return Ok(Setting {
                mode: Mode::Closed,
                cx: cx.clone(),
                theta: data.theta.clone(),
                kappa: data.kappa.clone(),
                base_face: vec![true; cx.num_faces()],
                all_faces_equality: false,
            });
        }
        if !data.framed {
            if data.geometry == Geometry::Euclidean {
                return Err(ConditionsError::Unsupported(
                    "Euclidean surfaces with geodesic boundary need framed data".into(),
                ));
            }
            return Ok(Setting {
                mode: Mode::GeodesicBoundary,
                cx: cx.clone(),
                theta: data.theta.clone(),
                kappa: data.kappa.clone(),
                base_face: vec![true; cx.num_faces()],
                all_faces_equality: false,
            });
        }
        let x = cx.extended_graph()?;
        let theta = data.extended_theta(&x)?;
        let mut kappa = data.kappa.clone();
        kappa.resize(x.complex.num_faces(), Angle::zero());
        let mut base_face = vec![true; cx.num_faces()];
        base_face.resize(x.complex.num_faces(), false);
        Ok(Setting {
            mode: Mode::Framed,
            cx: x.complex,
            theta,
            kappa,
            base_face,
            all_faces_equality: data.geometry == Geometry::Euclidean,
        })
    }

    fn on_surface_boundary(&self, h: usize) -> bool {
        self.cx.twin(h).is_none()
    }
}

// ---------------------------------------------------------------------------
// Cells

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SideKind {
    Edge(usize),
    Chord,
}

#[derive(Clone, Debug)]
struct Cell {
    face: usize,
    /// Corner positions in the face cycle, increasing.
    positions: Vec<usize>,
    full: bool,
    chords: usize,
    sides: Vec<SideKind>,
    /// A corner with chords on both sides (two chords share an endpoint).
    chord_corner: bool,
}

fn cell_sides(len: usize, positions: &[usize], face: &[usize]) -> Vec<SideKind> {
    let k = positions.len();
    (0..k)
        .map(|i| {
            let a = positions[i];
            let b = positions[(i + 1) % k];
            if (a + 1) % len == b {
                SideKind::Edge(face[a])
            } else {
                SideKind::Chord
            }
        })
        .collect()
}

/// All pieces of a face with between one and `budget` chords.
fn face_pieces(cx: &CellComplex, f: usize, budget: usize) -> Vec<Cell> {
    let face = cx.face(f);
    let len = face.len();
    if len < 3 || budget == 0 || len > 62 {
        return Vec::new();
    }
    let mut masks = BTreeSet::new();
    // Place up to `budget` runs of consecutive corners separated by gaps.
    fn place(len: usize, first: usize, cur: usize, runs_left: usize, mask: u64, out: &mut BTreeSet<u64>) {
        // `cur` is the next free position (relative to `first`).
        for start in cur..len {
            for run in 1..=len {
                let end = start + run; // exclusive, relative
                // The run plus one gap before wrapping back to `first`.
                if end + 1 > len {
                    break;
                }
                let mut m = mask;
                for p in start..end {
                    m |= 1u64 << ((first + p) % len);
                }
                out.insert(m);
                if runs_left > 1 {
                    place(len, first, end + 1, runs_left - 1, m, out);
                }
            }
        }
    }
    for first in 0..len {
        place(len, first, 0, budget, 0, &mut masks);
    }
    let full = (1u64 << len) - 1;
    let mut out = Vec::new();
    for mask in masks {
        if mask == full || mask.count_ones() < 2 {
            continue;
        }
        let positions: Vec<usize> = (0..len).filter(|p| mask & (1 << p) != 0).collect();
        let sides = cell_sides(len, &positions, face);
        let chords = sides.iter().filter(|s| **s == SideKind::Chord).count();
        if chords == 0 || chords > budget || !sides.iter().any(|s| matches!(s, SideKind::Edge(_))) {
            continue;
        }
        // Chords must join distinct vertices.
        let k = positions.len();
        let ok = (0..k).all(|i| {
            sides[i] != SideKind::Chord || cx.origin(face[positions[i]]) != cx.origin(face[positions[(i + 1) % k]])
        });
        if !ok {
            continue;
        }
        let chord_corner = (0..k).any(|i| sides[i] == SideKind::Chord && sides[(i + k - 1) % k] == SideKind::Chord);
        out.push(Cell { face: f, positions, full: false, chords, sides, chord_corner });
    }
    out
}

/// Whether two pieces of the same face have disjoint interiors and no
/// common chord; returns `Some(shares_corner)` when compatible.
fn pieces_compatible(len: usize, a: &Cell, b: &Cell) -> Option<bool> {
    if a.full || b.full {
        return None;
    }
    let k = a.positions.len();
    let in_arc = |from: usize, to: usize, p: usize| {
        // Closed cyclic arc from `from` to `to`.
        let span = (to + len - from) % len;
        (p + len - from) % len <= span
    };
    for i in 0..k {
        if a.sides[i] != SideKind::Chord {
            continue;
        }
        let (s, t) = (a.positions[i], a.positions[(i + 1) % k]);
        if b.positions.iter().all(|&p| in_arc(s, t, p)) {
            let touches_s = b.positions.contains(&s);
            let touches_t = b.positions.contains(&t);
            if touches_s && touches_t {
                return None;
            }
            return Some(touches_s || touches_t);
        }
    }
    None
}

struct CellSystem {
    cells: Vec<Cell>,
    adjacency: Vec<FixedBitSet>,
    neighbours: Vec<Vec<usize>>,
    /// Pairwise compatibility of cells in the same face (None = conflict).
    same_face: BTreeMap<(usize, usize), bool>,
}

impl CellSystem {
    fn new(cx: &CellComplex, budget: usize) -> CellSystem {
        let mut cells = Vec::new();
        for f in 0..cx.num_faces() {
            let len = cx.face(f).len();
            let positions: Vec<usize> = (0..len).collect();
            let sides = cell_sides(len, &positions, cx.face(f));
            cells.push(Cell { face: f, positions, full: true, chords: 0, sides, chord_corner: false });
        }
        for f in 0..cx.num_faces() {
            cells.extend(face_pieces(cx, f, budget));
        }
        let n = cells.len();
        let mut sides_on: Vec<Vec<(usize, usize)>> = vec![Vec::new(); cx.num_half_edges()];
        for (c, cell) in cells.iter().enumerate() {
            for (i, s) in cell.sides.iter().enumerate() {
                if let SideKind::Edge(h) = s {
                    sides_on[*h].push((c, i));
                }
            }
        }
        let mut adjacency = vec![FixedBitSet::with_capacity(n); n];
        for (c, cell) in cells.iter().enumerate() {
            for s in &cell.sides {
                if let SideKind::Edge(h) = s {
                    if let Some(t) = cx.twin(*h) {
                        for &(d, _) in &sides_on[t] {
                            if d != c {
                                adjacency[c].insert(d);
                                adjacency[d].insert(c);
                            }
                        }
                    }
                }
            }
        }
        let neighbours = adjacency.iter().map(|b| b.ones().collect()).collect();
        let mut same_face = BTreeMap::new();
        let mut by_face: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            by_face.entry(cell.face).or_default().push(c);
        }
        for list in by_face.values() {
            for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    let len = cx.face(cells[a].face).len();
                    if let Some(touch) = pieces_compatible(len, &cells[a], &cells[b]) {
                        same_face.insert((a, b), touch);
                    }
                }
            }
        }
        CellSystem { cells, adjacency, neighbours, same_face }
    }

    fn compatible(&self, a: usize, b: usize) -> Option<bool> {
        if self.cells[a].face != self.cells[b].face {
            return Some(false);
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.same_face.get(&key).copied()
    }
}

// ---------------------------------------------------------------------------
// Domain evaluation

/// A conflict-free connected set of cells together with its internal
/// adjacencies.
struct CellSet {
    cells: Vec<Cell>,
    /// Internal adjacencies: (side a, side b, edge), sides as (local cell, side).
    internal: Vec<((usize, usize), (usize, usize), usize)>,
    chords: usize,
    kappa: Angle,
    lhs_fixed: Angle,
    shared_endpoint: bool,
}

struct Evaluation {
    chi: i64,
    m: usize,
    n: usize,
    lhs: Angle,
    rhs: Angle,
    boundary_cycles: Vec<Vec<(usize, usize)>>,
}

impl Setting {
    fn cell_set(&self, sys: &CellSystem, cells: &[usize]) -> CellSet {
        let mut shared_endpoint = false;
        for (i, &c) in cells.iter().enumerate() {
            for &d in &cells[i + 1..] {
                if sys.cells[d].face == sys.cells[c].face && sys.compatible(c, d) == Some(true) {
                    shared_endpoint = true;
                }
            }
        }
        self.make_set(cells.iter().map(|&c| sys.cells[c].clone()).collect(), shared_endpoint)
    }

    fn make_set(&self, cells: Vec<Cell>, shared_chord_endpoint: bool) -> CellSet {
        let mut side_of_half_edge = HashMap::new();
        for (i, cell) in cells.iter().enumerate() {
            for (s, side) in cell.sides.iter().enumerate() {
                if let SideKind::Edge(h) = *side {
                    side_of_half_edge.insert(h, (i, s));
                }
            }
        }
        let mut internal = Vec::new();
        let mut chords = 0;
        let mut kappa = Angle::zero();
        let mut lhs_fixed = Angle::zero();
        let mut shared_endpoint = shared_chord_endpoint;
        for (i, cell) in cells.iter().enumerate() {
            chords += cell.chords;
            shared_endpoint |= cell.chord_corner;
            if cell.full {
                kappa = kappa + self.kappa[cell.face];
            }
            for (s, side) in cell.sides.iter().enumerate() {
                let SideKind::Edge(h) = *side else { continue };
                let e = self.cx.edge_of(h);
                match self.cx.twin(h) {
                    None => {
                        if self.mode == Mode::Framed {
                            lhs_fixed = lhs_fixed + self.theta[e];
                        }
                    }
                    Some(t) => match side_of_half_edge.get(&t) {
                        Some(&p) => {
                            // Record each adjacency once.
                            if (i, s) < p {
                                internal.push(((i, s), p, e));
                            }
                        }
                        None => lhs_fixed = lhs_fixed + self.theta[e],
                    },
                }
            }
        }
        CellSet { cells, internal, chords, kappa, lhs_fixed, shared_endpoint }
    }

    /// Evaluate the domain given by `glued[k]` for each internal adjacency.
    fn evaluate(&self, set: &CellSet, glued: &[bool]) -> Option<Evaluation> {
        let cells = &set.cells;
        // Side indexing.
        let mut offset = Vec::with_capacity(cells.len() + 1);
        let mut total = 0;
        for c in cells {
            offset.push(total);
            total += c.sides.len();
        }
        offset.push(total);
        let sid = |(i, s): (usize, usize)| offset[i] + s;
        let next = |x: usize| {
            let i = offset.partition_point(|&o| o <= x) - 1;
            let k = offset[i + 1] - offset[i];
            offset[i] + (x - offset[i] + 1) % k
        };
        let mut partner = vec![usize::MAX; total];
        let mut uf = UnionFind::new(cells.len());
        let mut glued_count = 0;
        for (k, &(a, b, _)) in set.internal.iter().enumerate() {
            if glued[k] {
                partner[sid(a)] = sid(b);
                partner[sid(b)] = sid(a);
                uf.union(a.0, b.0);
                glued_count += 1;
            }
        }
        if uf.components() != 1 {
            return None;
        }
        if glued_count * 2 == total {
            // Closed surface: not an admissible domain.
            return None;
        }
        // Vertex fans.
        let mut corners = UnionFind::new(total);
        for x in 0..total {
            if partner[x] != usize::MAX {
                corners.union(x, next(partner[x]));
            }
        }
        let v_hat = corners.components() as i64;
        let e_hat = (total - glued_count) as i64;
        let chi = v_hat - e_hat + cells.len() as i64;

        // Boundary cycles over unglued sides.
        let mut seen = vec![false; total];
        let mut cycles = Vec::new();
        let side_of = |x: usize| {
            let i = offset.partition_point(|&o| o <= x) - 1;
            (i, x - offset[i])
        };
        for x0 in 0..total {
            if partner[x0] != usize::MAX || seen[x0] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut x = x0;
            loop {
                seen[x] = true;
                cyc.push(side_of(x));
                let mut y = next(x);
                while partner[y] != usize::MAX {
                    y = next(partner[y]);
                }
                x = y;
                if x == x0 {
                    break;
                }
            }
            cycles.push(cyc);
        }
        let is_surface = |(i, s): (usize, usize)| match cells[i].sides[s] {
            SideKind::Edge(h) => self.on_surface_boundary(h),
            SideKind::Chord => false,
        };
        let mut runs = 0;
        for cyc in &cycles {
            let flags: Vec<bool> = cyc.iter().map(|&s| is_surface(s)).collect();
            if flags.iter().all(|&b| b) {
                continue;
            }
            let k = flags.len();
            runs += (0..k).filter(|&i| flags[i] && !flags[(i + k - 1) % k]).count();
        }
        let (m, n) = match self.mode {
            Mode::Closed => (set.chords, 0),
            Mode::GeodesicBoundary => (set.chords + runs, 0),
            Mode::Framed => (set.chords, runs),
        };
        let mut lhs = set.lhs_fixed;
        for (k, &(_, _, e)) in set.internal.iter().enumerate() {
            if !glued[k] {
                lhs = lhs + self.theta[e] * 2;
            }
        }
        let rhs = Angle::pi_frac(2 * chi - m as i64 - n as i64, 1) - set.kappa;
        Some(Evaluation { chi, m, n, lhs, rhs, boundary_cycles: cycles })
    }

    fn domain(&self, set: &CellSet, ev: &Evaluation) -> AdmissibleDomain {
        let cells = &set.cells;
        let mut contained: Vec<usize> = cells.iter().filter(|c| c.full).map(|c| c.face).collect();
        contained.sort_unstable();
        let pieces = cells
            .iter()
            .filter(|c| !c.full)
            .map(|cell| {
                let face = self.cx.face(cell.face);
                Piece { face: cell.face, corners: cell.positions.iter().map(|&p| self.cx.origin(face[p])).collect() }
            })
            .collect();
        let mut mult: BTreeMap<usize, u8> = BTreeMap::new();
        let walks = ev
            .boundary_cycles
            .iter()
            .map(|cyc| {
                cyc.iter()
                    .map(|&(i, s)| {
                        let cell = &cells[i];
                        let face = self.cx.face(cell.face);
                        let k = cell.positions.len();
                        match cell.sides[s] {
                            SideKind::Edge(h) => {
                                let e = self.cx.edge_of(h);
                                *mult.entry(e).or_default() += 1;
                                if self.on_surface_boundary(h) {
                                    BoundaryStep::SurfaceBoundary { edge: e }
                                } else {
                                    BoundaryStep::Edge { edge: e, half_edge: h }
                                }
                            }
                            SideKind::Chord => BoundaryStep::Chord {
                                face: cell.face,
                                from: self.cx.origin(face[cell.positions[s]]),
                                to: self.cx.origin(face[cell.positions[(s + 1) % k]]),
                            },
                        }
                    })
                    .collect()
            })
            .collect();
        AdmissibleDomain {
            contained_faces: contained,
            pieces,
            boundary_walks: walks,
            euler_char: ev.chi,
            m: ev.m,
            n: ev.n,
            edge_multiplicity: mult,
            shared_chord_endpoint: set.shared_endpoint,
        }
    }

    fn is_face_domain(&self, set: &CellSet, glued: &[bool]) -> Option<usize> {
        if set.cells.len() == 1 && set.cells[0].full && glued.iter().all(|g| !g) {
            let f = set.cells[0].face;
            if self.base_face[f] {
                return Some(f);
            }
        }
        None
    }

    fn is_all_faces_domain(&self, set: &CellSet, glued: &[bool]) -> bool {
        self.all_faces_equality
            && set.cells.len() == self.cx.num_faces()
            && set.cells.iter().all(|c| c.full)
            && glued.iter().all(|&g| g)
    }
}

struct UnionFind {
    parent: Vec<usize>,
    count: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), count: n }
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let nx = self.parent[y];
            self.parent[y] = r;
            y = nx;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
            self.count -= 1;
        }
    }
    fn components(&self) -> usize {
        self.count
    }
}

// ---------------------------------------------------------------------------
// Enumeration of connected cell sets

struct Search<'a> {
    setting: &'a Setting,
    sys: &'a CellSystem,
    opts: &'a CheckOptions,
    /// Sum of negative κ over all full faces; bounds how much Σκ can drop.
    negative_kappa: Angle,
}

/// Callback outcome.
enum Flow {
    Continue,
    Stop,
}

impl Search<'_> {
    /// Upper bound of the right-hand side over all supersets.
    fn prunable(&self, chords: usize, kappa: Angle, negative_left: Angle) -> bool {
        if self.opts.brute_force {
            return false;
        }
        let bound = Angle::pi_frac(2 - chords as i64, 1) - kappa - negative_left;
        bound.sign(self.opts.tol) == Ordering::Less
    }

    fn face_chords_ok(&self, chosen: &[usize], w: usize) -> bool {
        let f = self.sys.cells[w].face;
        let total: usize = chosen.iter().filter(|&&c| self.sys.cells[c].face == f).map(|&c| self.sys.cells[c].chords).sum();
        total + self.sys.cells[w].chords <= self.opts.chord_budget
    }

    fn compatible_with(&self, chosen: &[usize], w: usize) -> bool {
        chosen.iter().all(|&c| self.sys.cells[c].face != self.sys.cells[w].face || self.sys.compatible(c, w).is_some())
            && self.face_chords_ok(chosen, w)
    }

    fn state(&self, chosen: &[usize]) -> (usize, Angle, Angle) {
        let mut chords = 0;
        let mut kappa = Angle::zero();
        let mut neg = self.negative_kappa;
        for &c in chosen {
            let cell = &self.sys.cells[c];
            chords += cell.chords;
            if cell.full {
                let k = self.setting.kappa[cell.face];
                kappa = kappa + k;
                if k.sign(0.0) == Ordering::Less {
                    neg = neg - k;
                }
            }
        }
        (chords, kappa, neg)
    }

    /// Enumerate connected conflict-free cell sets whose smallest cell is `root`.
    fn from_root(&self, root: usize, visit: &mut dyn FnMut(&[usize]) -> Flow) -> Flow {
        let mut chosen = vec![root];
        let (ch, k, neg) = self.state(&chosen);
        if self.prunable(ch, k, neg) {
            return Flow::Continue;
        }
        let mut closed = self.sys.adjacency[root].clone();
        closed.insert(root);
        let ext: Vec<usize> = self.sys.neighbours[root].iter().copied().filter(|&u| u > root).collect();
        self.extend(&mut chosen, ext, root, closed, visit)
    }

    fn extend(
        &self,
        chosen: &mut Vec<usize>,
        mut ext: Vec<usize>,
        root: usize,
        closed: FixedBitSet,
        visit: &mut dyn FnMut(&[usize]) -> Flow,
    ) -> Flow {
        if let Flow::Stop = visit(chosen) {
            return Flow::Stop;
        }
        while let Some(w) = ext.pop() {
            if !self.compatible_with(chosen, w) {
                continue;
            }
            let mut child_ext = ext.clone();
            for &u in &self.sys.neighbours[w] {
                if u > root && !closed.contains(u) {
                    child_ext.push(u);
                }
            }
            chosen.push(w);
            let (ch, k, neg) = self.state(chosen);
            if !self.prunable(ch, k, neg) {
                let mut child_closed = closed.clone();
                child_closed.union_with(&self.sys.adjacency[w]);
                child_closed.insert(w);
                if let Flow::Stop = self.extend(chosen, child_ext, root, child_closed, visit) {
                    chosen.pop();
                    return Flow::Stop;
                }
            }
            chosen.pop();
        }
        Flow::Continue
    }

    /// Enumerate gluing patterns of a cell set worth evaluating.
    fn gluings(&self, set: &CellSet, visit: &mut dyn FnMut(&[bool]) -> Flow) -> Flow {
        let k = set.internal.len();
        if self.opts.brute_force {
            if k > 24 {
                // Fall back to the pruned enumeration for very large sets.
                return self.pruned_gluings(set, visit);
            }
            for mask in 0u64..(1u64 << k) {
                let glued: Vec<bool> = (0..k).map(|i| mask & (1 << i) != 0).collect();
                if let Flow::Stop = visit(&glued) {
                    return Flow::Stop;
                }
            }
            return Flow::Continue;
        }
        self.pruned_gluings(set, visit)
    }

    fn pruned_gluings(&self, set: &CellSet, visit: &mut dyn FnMut(&[bool]) -> Flow) -> Flow {
        // χ ≤ 1, so RHS ≤ (2 − m)π − Σκ; slits add 2θ to the left side.
        let rhs_max = Angle::pi_frac(2 - set.chords as i64, 1) - set.kappa;
        let room = rhs_max - set.lhs_fixed;
        if room.sign(self.opts.tol) == Ordering::Less {
            return Flow::Continue;
        }
        let k = set.internal.len();
        let mut glued = vec![true; k];
        fn rec(
            s: &Search,
            set: &CellSet,
            i: usize,
            room: Angle,
            glued: &mut Vec<bool>,
            visit: &mut dyn FnMut(&[bool]) -> Flow,
        ) -> Flow {
            if i == glued.len() {
                return visit(glued);
            }
            if let Flow::Stop = rec(s, set, i + 1, room, glued, visit) {
                return Flow::Stop;
            }
            let cost = s.setting.theta[set.internal[i].2] * 2;
            let left = room - cost;
            if left.sign(s.opts.tol) != Ordering::Less {
                glued[i] = false;
                let r = rec(s, set, i + 1, left, glued, visit);
                glued[i] = true;
                if let Flow::Stop = r {
                    return Flow::Stop;
                }
            }
            Flow::Continue
        }
        rec(self, set, 0, room, &mut glued, visit)
    }
}

/// Outcome of scanning the domains reachable from one root cell.
#[derive(Default)]
struct RootScan {
    violation: Option<(AdmissibleDomain, Angle, Angle)>,
    ideal: BTreeSet<usize>,
    face_slack: BTreeMap<usize, Angle>,
    domains: usize,
    sets: usize,
    shared: usize,
    budget_hit: bool,
}

impl RootScan {
    /// Classify one evaluated domain; stops the scan on a violation or when
    /// the domain budget is exhausted.
    fn judge(&mut self, setting: &Setting, opts: &CheckOptions, set: &CellSet, glued: &[bool], ev: Evaluation) -> Flow {
        self.domains += 1;
        if self.domains > opts.max_domains {
            self.budget_hit = true;
            return Flow::Stop;
        }
        if opts.restricted && (ev.chi < 1 || ev.m > 1) {
            return Flow::Continue;
        }
        if set.shared_endpoint {
            self.shared += 1;
        }
        let slack = ev.lhs - ev.rhs;
        let face = setting.is_face_domain(set, glued);
        if let Some(f) = face {
            self.face_slack.insert(f, slack);
        }
        let violated = match slack.sign(opts.tol) {
            Ordering::Less => true,
            Ordering::Equal => match face {
                Some(f) => {
                    self.ideal.insert(f);
                    false
                }
                None => !setting.is_all_faces_domain(set, glued),
            },
            Ordering::Greater => false,
        };
        if violated {
            let d = setting.domain(set, &ev);
            self.violation = Some((d, ev.lhs, ev.rhs));
            return Flow::Stop;
        }
        Flow::Continue
    }
}

/// Scan every gluing pattern of every connected cell set rooted at `root`.
fn scan_root(search: &Search, root: usize) -> RootScan {
    let setting = search.setting;
    let sys = search.sys;
    let mut out = RootScan::default();
    let mut visit_set = |cells: &[usize]| -> Flow {
        if !cells.iter().any(|&c| sys.cells[c].full) {
            return Flow::Continue;
        }
        out.sets += 1;
        let set = setting.cell_set(sys, cells);
        search.gluings(&set, &mut |glued: &[bool]| match setting.evaluate(&set, glued) {
            Some(ev) => out.judge(setting, search.opts, &set, glued, ev),
            None => Flow::Continue,
        })
    };
    search.from_root(root, &mut visit_set);
    out
}

// ---------------------------------------------------------------------------
// Boundary-first search
//
// A domain is a connected component of the surface cut along some edges and
// chords, and its left-hand side is at least the θ-length of the cut edges it
// touches. Since χ(Ω) ≤ 1, a domain can only violate (or meet) its bound if
// Σθ(cut edges) + π·(#chords) ≤ 2π − Σ_{κ<0} κ. Enumerating cuts under that
// budget is far cheaper than growing cell sets when θ is not tiny.

#[derive(Clone, Copy, Debug)]
enum CutItem {
    Edge(usize),
    Chord { face: usize, a: usize, b: usize },
}

struct CutSearch<'a> {
    setting: &'a Setting,
    opts: &'a CheckOptions,
    items: Vec<(CutItem, f64)>,
    bound: f64,
}

fn chords_cross(a: (usize, usize), b: (usize, usize)) -> bool {
    let inside = |x: usize, (lo, hi): (usize, usize)| lo < x && x < hi;
    (inside(b.0, a) && !inside(b.1, a) && b.1 != a.0 && b.1 != a.1)
        || (inside(b.1, a) && !inside(b.0, a) && b.0 != a.0 && b.0 != a.1)
}

/// Split a face along non-crossing chords (corner positions) into pieces.
fn split_face(cx: &CellComplex, f: usize, chords: &[(usize, usize)]) -> Vec<Cell> {
    let face = cx.face(f);
    let len = face.len();
    let mut pieces: Vec<Vec<usize>> = vec![(0..len).collect()];
    for &(a, b) in chords {
        let Some(k) = pieces.iter().position(|p| p.contains(&a) && p.contains(&b)) else { continue };
        let p = pieces.swap_remove(k);
        let ia = p.iter().position(|&x| x == a).unwrap();
        let ib = p.iter().position(|&x| x == b).unwrap();
        let k = p.len();
        let arc = |from: usize, to: usize| {
            let mut v = vec![p[from]];
            let mut i = from;
            while i != to {
                i = (i + 1) % k;
                v.push(p[i]);
            }
            v
        };
        pieces.push(arc(ia, ib));
        pieces.push(arc(ib, ia));
    }
    pieces
        .into_iter()
        .map(|positions| {
            let sides = cell_sides(len, &positions, face);
            let k = sides.len();
            let chords = sides.iter().filter(|s| **s == SideKind::Chord).count();
            let chord_corner = (0..k).any(|i| sides[i] == SideKind::Chord && sides[(i + k - 1) % k] == SideKind::Chord);
            Cell { face: f, positions, full: false, chords, sides, chord_corner }
        })
        .collect()
}

impl CutSearch<'_> {
    fn new<'a>(setting: &'a Setting, opts: &'a CheckOptions) -> CutSearch<'a> {
        let cx = &setting.cx;
        let mut items = Vec::new();
        for e in 0..cx.num_edges() {
            if cx.edge(e).twin.is_some() {
                items.push((CutItem::Edge(e), setting.theta[e].value()));
            }
        }
        if opts.chord_budget > 0 {
            for f in 0..cx.num_faces() {
                let face = cx.face(f);
                let len = face.len();
                for a in 0..len {
                    for b in a + 2..len {
                        if a == 0 && b == len - 1 {
                            continue;
                        }
                        if cx.origin(face[a]) == cx.origin(face[b]) {
                            continue;
                        }
                        items.push((CutItem::Chord { face: f, a, b }, PI));
                    }
                }
            }
        }
        let negative: f64 = setting.kappa.iter().map(|k| k.value()).filter(|&k| k < 0.0).sum();
        let bound = 2.0 * PI - negative + 1e3 * opts.tol.max(1e-12);
        CutSearch { setting, opts, items, bound }
    }

    fn admissible_item(&self, chosen: &[usize], i: usize) -> bool {
        let CutItem::Chord { face, a, b } = self.items[i].0 else { return true };
        let mut count = 1;
        for &j in chosen {
            if let CutItem::Chord { face: g, a: c, b: d } = self.items[j].0 {
                if g == face {
                    count += 1;
                    if chords_cross((a, b), (c, d)) {
                        return false;
                    }
                }
            }
        }
        count <= self.opts.chord_budget
    }

    /// All cuts whose smallest item is `root` (or the empty cut for `None`).
    fn scan(&self, root: Option<usize>) -> RootScan {
        let mut out = RootScan::default();
        let mut chosen = Vec::new();
        match root {
            None => {
                self.evaluate_cut(&chosen, &mut out);
            }
            Some(r) => {
                if self.items[r].1 <= self.bound {
                    chosen.push(r);
                    self.extend(&mut chosen, r + 1, self.items[r].1, &mut out);
                }
            }
        }
        out
    }

    fn extend(&self, chosen: &mut Vec<usize>, from: usize, cost: f64, out: &mut RootScan) -> Flow {
        if let Flow::Stop = self.evaluate_cut(chosen, out) {
            return Flow::Stop;
        }
        for i in from..self.items.len() {
            let c = cost + self.items[i].1;
            if c > self.bound || !self.admissible_item(chosen, i) {
                continue;
            }
            chosen.push(i);
            let flow = self.extend(chosen, i + 1, c, out);
            chosen.pop();
            if let Flow::Stop = flow {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }

    fn evaluate_cut(&self, chosen: &[usize], out: &mut RootScan) -> Flow {
        let setting = self.setting;
        let cx = &setting.cx;
        let mut cut = vec![false; cx.num_edges()];
        let mut face_chords: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for &i in chosen {
            match self.items[i].0 {
                CutItem::Edge(e) => cut[e] = true,
                CutItem::Chord { face, a, b } => face_chords.entry(face).or_default().push((a, b)),
            }
        }
        let mut cells = Vec::with_capacity(cx.num_faces() + chosen.len());
        for f in 0..cx.num_faces() {
            match face_chords.get(&f) {
                None => {
                    let len = cx.face(f).len();
                    let positions: Vec<usize> = (0..len).collect();
                    let sides = cell_sides(len, &positions, cx.face(f));
                    cells.push(Cell { face: f, positions, full: true, chords: 0, sides, chord_corner: false });
                }
                Some(ch) => cells.extend(split_face(cx, f, ch)),
            }
        }
        let mut cell_of = vec![usize::MAX; cx.num_half_edges()];
        for (i, cell) in cells.iter().enumerate() {
            for s in &cell.sides {
                if let SideKind::Edge(h) = *s {
                    cell_of[h] = i;
                }
            }
        }
        let mut uf = UnionFind::new(cells.len());
        for h in 0..cx.num_half_edges() {
            if let Some(t) = cx.twin(h) {
                if !cut[cx.edge_of(h)] {
                    uf.union(cell_of[h], cell_of[t]);
                }
            }
        }
        let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..cells.len() {
            components.entry(uf.find(i)).or_default().push(i);
        }
        for members in components.values() {
            let mut inside = vec![false; cells.len()];
            for &i in members {
                inside[i] = true;
            }
            if !members.iter().any(|&i| cells[i].full) {
                continue;
            }
            // Every cut item must touch the component, chords on one side only.
            let mut minimal = true;
            for &i in chosen {
                match self.items[i].0 {
                    CutItem::Edge(e) => {
                        let ed = cx.edge(e);
                        let t = ed.twin.unwrap();
                        if !inside[cell_of[ed.half_edge]] && !inside[cell_of[t]] {
                            minimal = false;
                        }
                    }
                    CutItem::Chord { face, a, b } => {
                        let touching = members
                            .iter()
                            .filter(|&&m| {
                                let c = &cells[m];
                                let k = c.positions.len();
                                c.face == face
                                    && (0..k).any(|s| {
                                        let (x, y) = (c.positions[s], c.positions[(s + 1) % k]);
                                        c.sides[s] == SideKind::Chord && (x.min(y), x.max(y)) == (a, b)
                                    })
                            })
                            .count();
                        if touching != 1 {
                            minimal = false;
                        }
                    }
                }
                if !minimal {
                    break;
                }
            }
            if !minimal {
                continue;
            }
            let mut shared = false;
            for ch in face_chords.values() {
                for (i, x) in ch.iter().enumerate() {
                    for y in &ch[i + 1..] {
                        if x.0 == y.0 || x.0 == y.1 || x.1 == y.0 || x.1 == y.1 {
                            shared = true;
                        }
                    }
                }
            }
            let set = setting.make_set(members.iter().map(|&i| cells[i].clone()).collect(), shared);
            let glued: Vec<bool> = set.internal.iter().map(|&(_, _, e)| !cut[e]).collect();
            if let Some(ev) = setting.evaluate(&set, &glued) {
                if let Flow::Stop = out.judge(setting, self.opts, &set, &glued, ev) {
                    return Flow::Stop;
                }
            }
        }
        Flow::Continue
    }
}

fn check_ranges(setting: &Setting) -> Option<Rejection> {
    for (e, t) in setting.theta.iter().enumerate() {
        let v = t.value();
        let below = t.sign(0.0) != Ordering::Greater;
        let above = (*t - Angle::pi_frac(1, 1)).sign(0.0) != Ordering::Less;
        if below || above || !v.is_finite() {
            return Some(Rejection::ThetaOutOfRange { edge: e, value: v });
        }
    }
    for (f, k) in setting.kappa.iter().enumerate() {
        if (*k - Angle::pi_frac(2, 1)).sign(0.0) != Ordering::Less || !k.value().is_finite() {
            return Some(Rejection::KappaOutOfRange { face: f, value: k.value() });
        }
    }
    for f in 0..setting.cx.num_faces() {
        let len = setting.cx.face(f).len();
        if len < 3 {
            return Some(Rejection::DegenerateFace { face: f, sides: len });
        }
    }
    None
}

fn gauss_bonnet(cx: &CellComplex, setting: &Setting, data: &AngleData, tol: f64) -> Option<Rejection> {
    let sum: Angle = data.kappa.iter().copied().sum();
    let chi = cx.euler_characteristic();
    let (bound, relation) = match setting.mode {
        Mode::Closed | Mode::GeodesicBoundary => (Angle::pi_frac(2 * chi, 1), "2πχ(Σ)"),
        Mode::Framed => {
            let outer: Angle = (0..setting.cx.num_edges())
                .filter(|&e| setting.cx.is_boundary_edge(e))
                .map(|e| setting.theta[e])
                .sum();
            match (data.geometry, data.framed_reading) {
                (Geometry::Hyperbolic, FramedReading::Literal) => (Angle::pi_frac(2, 1) - outer, "2π − Σθ(∂)"),
                _ => (Angle::pi_frac(2 * chi, 1) - outer, "2πχ(Σ) − Σθ(∂)"),
            }
        }
    };
    let diff = sum - bound;
    let ok = match data.geometry {
        Geometry::Euclidean => diff.sign(tol) == Ordering::Equal,
        Geometry::Hyperbolic => diff.sign(tol) == Ordering::Greater,
    };
    if ok {
        None
    } else {
        let rel = match data.geometry {
            Geometry::Euclidean => format!("Σκ = {relation}"),
            Geometry::Hyperbolic => format!("Σκ > {relation}"),
        };
        Some(Rejection::GaussBonnetMismatch { curvature_sum: sum.value(), bound: bound.value(), relation: rel })
    }
}

/// Check the full existence conditions matching the complex
/// and data (closed Euclidean/hyperbolic, geodesic boundary, or framed).
pub fn check_conditions(cx: &CellComplex, data: &AngleData, opts: &CheckOptions) -> Result<Verdict, ConditionsError> {
    let setting = Setting::new(cx, data)?;
    let mut report = CheckReport {
        chord_budget: opts.chord_budget,
        pruned: !opts.brute_force,
        ..Default::default()
    };
    if setting.mode == Mode::Framed && data.geometry == Geometry::Hyperbolic {
        report.notes.push(match data.framed_reading {
            FramedReading::EulerCharacteristic => {
                "framed hyperbolic curvature bound read as 2πχ(Σ) − Σθ(∂); the literal 2π − Σθ(∂) reading is available".into()
            }
            FramedReading::Literal => "framed hyperbolic curvature bound read literally as 2π − Σθ(∂)".into(),
        });
    }
    if let Some(r) = check_ranges(&setting) {
        return Ok(Verdict::Rejected { reason: r, report });
    }
    if let Some(r) = gauss_bonnet(cx, &setting, data, opts.tol) {
        return Ok(Verdict::Rejected { reason: r, report });
    }
    let scans: Vec<RootScan> = if opts.brute_force {
        let sys = CellSystem::new(&setting.cx, opts.chord_budget);
        let search = Search { setting: &setting, sys: &sys, opts, negative_kappa: Angle::zero() };
        let roots: Vec<usize> = (0..sys.cells.len()).collect();
        roots.par_iter().map(|&r| scan_root(&search, r)).collect()
    } else {
        let search = CutSearch::new(&setting, opts);
        let roots: Vec<Option<usize>> = std::iter::once(None).chain((0..search.items.len()).map(Some)).collect();
        roots.par_iter().map(|&r| search.scan(r)).collect()
    };
    let mut ideal = BTreeSet::new();
    let mut face_slack = BTreeMap::new();
    let mut total = 0usize;
    for s in &scans {
        report.domains_examined += s.domains;
        report.cell_sets_examined += s.sets;
        report.shared_chord_endpoint_domains += s.shared;
        total += s.domains;
        ideal.extend(s.ideal.iter().copied());
        face_slack.extend(s.face_slack.iter().map(|(a, b)| (*a, *b)));
    }
    if let Some(s) = scans.iter().find(|s| s.violation.is_some()) {
        let (d, lhs, rhs) = s.violation.clone().unwrap();
        return Ok(Verdict::Rejected {
            reason: Rejection::DomainViolation { domain: d, lhs: lhs.value(), rhs: rhs.value() },
            report,
        });
    }
    if scans.iter().any(|s| s.budget_hit) || total > opts.max_domains {
        return Err(ConditionsError::BudgetExceeded { count: total });
    }
    for &f in &data.forced_ideal {
        if !ideal.contains(&f) {
            let slack = face_slack.get(&f).map(|s| s.value()).unwrap_or(f64::INFINITY);
            return Ok(Verdict::Rejected { reason: Rejection::ForcedIdealNotTight { face: f, slack }, report });
        }
    }
    Ok(Verdict::Accepted { ideal_faces: ideal, report })
}

/// Enumerate admissible domains of the working complex (Γ, or Γ′ for framed
/// data), deduplicated by (contained faces, edge multiplicities, χ, m, n).
///
/// Without `brute_force` only domains that can matter for the conditions are
/// produced (right-hand side not provably negative); with it every gluing
/// pattern of every connected cell set is listed.
pub fn enumerate_admissible_domains(
    cx: &CellComplex,
    data: &AngleData,
    opts: &CheckOptions,
) -> Result<Vec<AdmissibleDomain>, ConditionsError> {
    let setting = Setting::new(cx, data)?;
    let sys = CellSystem::new(&setting.cx, opts.chord_budget);
    let negative_kappa: Angle = (0..setting.cx.num_faces())
        .map(|f| setting.kappa[f])
        .filter(|k| k.sign(0.0) == Ordering::Less)
        .sum();
    let search = Search { setting: &setting, sys: &sys, opts, negative_kappa };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut count = 0usize;
    let mut over = false;
    for root in 0..sys.cells.len() {
        search.from_root(root, &mut |cells: &[usize]| {
            if !cells.iter().any(|&c| sys.cells[c].full) {
                return Flow::Continue;
            }
            let set = setting.cell_set(&sys, cells);
            let mut stop = false;
            search.gluings(&set, &mut |glued: &[bool]| {
                if let Some(ev) = setting.evaluate(&set, glued) {
                    count += 1;
                    if count > opts.max_domains {
                        stop = true;
                        return Flow::Stop;
                    }
                    let d = setting.domain(&set, &ev);
                    if seen.insert(d.key()) {
                        out.push(d);
                    }
                }
                Flow::Continue
            });
            if stop {
                over = true;
                Flow::Stop
            } else {
                Flow::Continue
            }
        });
        if over {
            return Err(ConditionsError::BudgetExceeded { count });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::fixtures::*;

    fn torus_data(theta: Angle) -> (CellComplex, AngleData) {
        let t = torus_grid(2, 2);
        let d = AngleData::uniform(&t, theta, Angle::zero(), Geometry::Euclidean);
        (t, d)
    }

    #[test]
    fn bouquet() {
        use std::f64::consts::FRAC_PI_2;
        assert!(bouquet_check(&[FRAC_PI_2; 4], 0.0));
        assert!(bouquet_check(&[2.0 * PI / 3.0; 3], 0.0));
        assert!(!bouquet_check(&[FRAC_PI_2; 3], 0.0));
    }

    #[test]
    fn torus_right_angles_accepted_with_all_faces_ideal() {
        let (t, d) = torus_data(Angle::pi_frac(1, 2));
        let v = check_conditions(&t, &d, &CheckOptions::default()).unwrap();
        assert_eq!(v.ideal_faces().unwrap(), &(0..4).collect::<BTreeSet<_>>(), "{v:?}");
    }

    #[test]
    fn torus_two_thirds_accepted_without_ideal_faces() {
        let (t, d) = torus_data(Angle::pi_frac(2, 3));
        let v = check_conditions(&t, &d, &CheckOptions::default()).unwrap();
        assert!(v.ideal_faces().unwrap().is_empty(), "{v:?}");
    }

    #[test]
    fn torus_quarter_angles_rejected_on_a_face() {
        let (t, d) = torus_data(Angle::pi_frac(1, 4));
        let v = check_conditions(&t, &d, &CheckOptions::default()).unwrap();
        match v.rejection().unwrap() {
            Rejection::DomainViolation { domain, lhs, rhs } => {
                assert!(domain.is_single_face(), "{domain:?}");
                assert!((lhs - PI).abs() < 1e-12 && (rhs - 2.0 * PI).abs() < 1e-12);
            }
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn k4_gauss_bonnet_mismatch() {
        let k = k4();
        let d = AngleData::uniform(&k, Angle::pi_frac(1, 2), Angle::pi_frac(4, 3), Geometry::Euclidean);
        let v = check_conditions(&k, &d, &CheckOptions::default()).unwrap();
        assert!(matches!(v.rejection(), Some(Rejection::GaussBonnetMismatch { .. })));
    }

    #[test]
    fn k4_domains_include_single_faces() {
        let k = k4();
        let d = AngleData::uniform(&k, Angle::pi_frac(1, 2), Angle::pi_frac(1, 1), Geometry::Euclidean);
        let opts = CheckOptions { chord_budget: 1, brute_force: true, ..Default::default() };
        let doms = enumerate_admissible_domains(&k, &d, &opts).unwrap();
        for f in 0..4 {
            assert!(doms.iter().any(|x| x.contained_faces == vec![f] && x.pieces.is_empty() && x.euler_char == 1 && x.m == 0));
        }
    }

    #[test]
    fn torus_domains_without_chords() {
        let (t, d) = torus_data(Angle::pi_frac(1, 2));
        let opts = CheckOptions { chord_budget: 0, brute_force: true, ..Default::default() };
        let doms = enumerate_admissible_domains(&t, &d, &opts).unwrap();
        // Single faces.
        for f in 0..4 {
            assert!(doms.iter().any(|x| x.contained_faces == vec![f] && x.euler_char == 1 && x.m == 0));
        }
        // Annuli made of two faces glued along both shared edges.
        let annuli = doms.iter().filter(|x| x.contained_faces.len() == 2 && x.euler_char == 0).count();
        assert!(annuli >= 4, "{annuli}");
        // The whole torus (empty boundary) is not a domain.
        assert!(!doms.iter().any(|x| x.contained_faces.len() == 4 && x.edge_multiplicity.is_empty()));
        // The torus minus one edge: χ = −1.
        assert!(doms.iter().any(|x| x.contained_faces.len() == 4 && x.euler_char == -1));
    }

    #[test]
    fn framed_square_has_surface_boundary_segment() {
        let s = square_disk();
        let mut d = AngleData::uniform(&s, Angle::pi_frac(1, 2), Angle::zero(), Geometry::Euclidean);
        d.framed = true;
        for v in 0..4 {
            d.boundary_angles.insert(v, Angle::pi_frac(1, 3));
        }
        for e in 0..4 {
            d.polygonal_angles.insert(e, Angle::pi_frac(1, 2));
        }
        let opts = CheckOptions { chord_budget: 1, brute_force: true, ..Default::default() };
        let doms = enumerate_admissible_domains(&s, &d, &opts).unwrap();
        assert!(doms.iter().any(|x| x.n == 1), "no domain with one boundary segment");
    }
}

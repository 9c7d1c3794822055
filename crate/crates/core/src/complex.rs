//! Cellular decompositions of compact orientable surfaces, stored as
//! rotation systems (half-edges with `next`, `twin` and `origin`).
//!
//! Half-edges with no twin lie on the boundary of the surface. Faces are the
//! orbits of `next`; every face lies to the left of its half-edges. Cell ids
//! are canonical: faces and edges are numbered by their smallest half-edge.
//!
//! Besides validation this module provides the dual complex, the extended
//! graph Γ′ of a complex with boundary (one collar quadrilateral per boundary
//! edge, carrying the boundary vertices and boundary edges), and the doubling
//! of a complex with boundary into a closed complex with an orientation
//! reversing involution.

use crate::angle::Angle;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfEdge {
    pub origin: usize,
    pub next: usize,
    pub twin: Option<usize>,
}

/// Declared topological type of the surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceType {
    pub genus: usize,
    pub boundary_components: usize,
}

impl SurfaceType {
    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.boundary_components as i64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComplexError {
    #[error("half-edge {half_edge} refers to a missing cell")]
    IndexOutOfRange { half_edge: usize },
    #[error("twin pairing is malformed at half-edge {half_edge}")]
    MalformedTwin { half_edge: usize },
    #[error("`next` is not a permutation of the half-edges (half-edge {half_edge})")]
    MalformedNext { half_edge: usize },
    #[error("half-edge {half_edge} and its twin point the same way; the surface is not orientable")]
    NonOrientable { half_edge: usize },
    #[error("the complex is disconnected: half-edge {half_edge} is unreachable from half-edge 0")]
    Disconnected { half_edge: usize },
    #[error("vertex {vertex} has no incident half-edge")]
    IsolatedVertex { vertex: usize },
    #[error("the neighbourhood of vertex {vertex} is not a disk or half-disk")]
    NonManifoldVertex { vertex: usize },
    #[error("the complex has no half-edges")]
    Empty,
    #[error("declared surface (genus {genus}, {boundary} boundary components) does not match the complex (χ = {chi}, {found_boundary} boundary components)")]
    SurfaceMismatch { genus: usize, boundary: usize, chi: i64, found_boundary: usize },
    #[error("the operation needs a closed surface but the complex has boundary")]
    HasBoundary,
    #[error("the operation needs a surface with boundary but the complex is closed")]
    NoBoundary,
    #[error("angle {value} on {cell} is outside its allowed range")]
    AngleOutOfRange { cell: String, value: f64 },
    #[error("missing angle on {cell}")]
    MissingAngle { cell: String },
}

/// An unoriented edge: one or two half-edges (`twin` is `None` on ∂Σ).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub half_edge: usize,
    pub twin: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct CellComplex {
    half_edges: Vec<HalfEdge>,
    vertex_labels: Vec<Option<String>>,
    face_labels: BTreeMap<usize, String>,
    prev: Vec<usize>,
    face_of: Vec<usize>,
    faces: Vec<Vec<usize>>,
    edge_of: Vec<usize>,
    edges: Vec<Edge>,
    vertex_out: Vec<Vec<usize>>,
    boundary_cycles: Vec<Vec<usize>>,
}

impl CellComplex {
    /// Validate a rotation system and compute faces, edges and boundary.
    pub fn build(
        num_vertices: usize,
        half_edges: Vec<HalfEdge>,
        declared: Option<SurfaceType>,
    ) -> Result<CellComplex, ComplexError> {
        let n = half_edges.len();
        if n == 0 {
            return Err(ComplexError::Empty);
        }
        for (h, he) in half_edges.iter().enumerate() {
            if he.origin >= num_vertices || he.next >= n || he.twin.is_some_and(|t| t >= n) {
                return Err(ComplexError::IndexOutOfRange { half_edge: h });
            }
        }
        let mut prev = vec![usize::MAX; n];
        for (h, he) in half_edges.iter().enumerate() {
            if prev[he.next] != usize::MAX {
                return Err(ComplexError::MalformedNext { half_edge: he.next });
            }
            prev[he.next] = h;
        }
        let dest = |h: usize| half_edges[half_edges[h].next].origin;
        for (h, he) in half_edges.iter().enumerate() {
            if let Some(t) = he.twin {
                if t == h || half_edges[t].twin != Some(h) {
                    return Err(ComplexError::MalformedTwin { half_edge: h });
                }
                let (to, td) = (half_edges[t].origin, dest(t));
                if to == dest(h) && td == he.origin {
                    continue;
                }
                if to == he.origin && td == dest(h) {
                    return Err(ComplexError::NonOrientable { half_edge: h });
                }
                return Err(ComplexError::MalformedTwin { half_edge: h });
            }
        }

        // Connectivity over next/twin.
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(h) = queue.pop_front() {
            let mut nb = vec![half_edges[h].next, prev[h]];
            nb.extend(half_edges[h].twin);
            for g in nb {
                if !seen[g] {
                    seen[g] = true;
                    queue.push_back(g);
                }
            }
        }
        if let Some(h) = seen.iter().position(|s| !s) {
            return Err(ComplexError::Disconnected { half_edge: h });
        }

        // Faces: next-orbits, numbered by smallest half-edge.
        let mut face_of = vec![usize::MAX; n];
        let mut faces = Vec::new();
        for h in 0..n {
            if face_of[h] != usize::MAX {
                continue;
            }
            let id = faces.len();
            let mut cyc = Vec::new();
            let mut g = h;
            loop {
                face_of[g] = id;
                cyc.push(g);
                g = half_edges[g].next;
                if g == h {
                    break;
                }
            }
            faces.push(cyc);
        }

        // Edges, numbered by smallest half-edge.
        let mut edge_of = vec![usize::MAX; n];
        let mut edges = Vec::new();
        for h in 0..n {
            if edge_of[h] != usize::MAX {
                continue;
            }
            let id = edges.len();
            edge_of[h] = id;
            if let Some(t) = half_edges[h].twin {
                edge_of[t] = id;
            }
            edges.push(Edge { half_edge: h, twin: half_edges[h].twin });
        }

        // Vertex rotations: σ(g) = next(twin(g)) turns around origin(g).
        let mut out_by_vertex: Vec<Vec<usize>> = vec![Vec::new(); num_vertices];
        for (h, he) in half_edges.iter().enumerate() {
            out_by_vertex[he.origin].push(h);
        }
        let mut vertex_out = Vec::with_capacity(num_vertices);
        for (v, outs) in out_by_vertex.iter().enumerate() {
            if outs.is_empty() {
                return Err(ComplexError::IsolatedVertex { vertex: v });
            }
            // Start a boundary vertex at the half-edge whose predecessor
            // (turning the other way) is missing.
            let starts: Vec<usize> = outs.iter().copied().filter(|&g| half_edges[prev[g]].twin.is_none()).collect();
            let start = match starts.len() {
                0 => outs[0],
                1 => starts[0],
                _ => return Err(ComplexError::NonManifoldVertex { vertex: v }),
            };
            let mut fan = vec![start];
            let mut g = start;
            while let Some(t) = half_edges[g].twin {
                g = half_edges[t].next;
                if g == start {
                    break;
                }
                fan.push(g);
            }
            if fan.len() != outs.len() {
                return Err(ComplexError::NonManifoldVertex { vertex: v });
            }
            vertex_out.push(fan);
        }

        // Boundary cycles: after boundary half-edge h, turn around dest(h)
        // until the next half-edge without twin.
        let mut in_cycle = vec![false; n];
        let mut boundary_cycles = Vec::new();
        for h in 0..n {
            if half_edges[h].twin.is_some() || in_cycle[h] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut g = h;
            loop {
                in_cycle[g] = true;
                cyc.push(g);
                let mut k = half_edges[g].next;
                while let Some(t) = half_edges[k].twin {
                    k = half_edges[t].next;
                }
                g = k;
                if g == h {
                    break;
                }
            }
            boundary_cycles.push(cyc);
        }

        let cx = CellComplex {
            half_edges,
            vertex_labels: vec![None; num_vertices],
            face_labels: BTreeMap::new(),
            prev,
            face_of,
            faces,
            edge_of,
            edges,
            vertex_out,
            boundary_cycles,
        };
        if let Some(s) = declared {
            if s.euler_characteristic() != cx.euler_characteristic() || s.boundary_components != cx.boundary_cycles.len()
            {
                return Err(ComplexError::SurfaceMismatch {
                    genus: s.genus,
                    boundary: s.boundary_components,
                    chi: cx.euler_characteristic(),
                    found_boundary: cx.boundary_cycles.len(),
                });
            }
        }
        Ok(cx)
    }

    /// Build a complex from oriented face boundaries given as vertex cycles;
    /// twins are matched by reversed vertex pairs. Convenient for tests and
    /// bundled instances; fails if a directed vertex pair is used twice.
    pub fn from_faces(num_vertices: usize, faces: &[Vec<usize>]) -> Result<CellComplex, ComplexError> {
        let mut half_edges = Vec::new();
        let mut by_pair: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for f in faces {
            let base = half_edges.len();
            let k = f.len();
            for i in 0..k {
                let h = base + i;
                if by_pair.insert((f[i], f[(i + 1) % k]), h).is_some() {
                    return Err(ComplexError::MalformedTwin { half_edge: h });
                }
                half_edges.push(HalfEdge { origin: f[i], next: base + (i + 1) % k, twin: None });
            }
        }
        for (&(a, b), &h) in &by_pair {
            half_edges[h].twin = by_pair.get(&(b, a)).copied();
        }
        CellComplex::build(num_vertices, half_edges, None)
    }

    /// The m×n grid of squares on the torus. Vertex (i, j) has id i + m·j
    /// and face (i, j) is the square with lower-left corner (i, j), its
    /// half-edges numbered 4·(i + m·j) + side with sides bottom, right, top,
    /// left.
    pub fn torus_grid(m: usize, n: usize) -> CellComplex {
        assert!(m >= 1 && n >= 1);
        let vid = |i: usize, j: usize| (i % m) + m * (j % n);
        let fid = |i: usize, j: usize| (i % m) + m * (j % n);
        let mut hes = Vec::with_capacity(4 * m * n);
        for j in 0..n {
            for i in 0..m {
                let base = 4 * fid(i, j);
                let corners = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)];
                let twins = [
                    4 * fid(i, j + n - 1) + 2,
                    4 * fid(i + 1, j) + 3,
                    4 * fid(i, j + 1),
                    4 * fid(i + m - 1, j) + 1,
                ];
                for s in 0..4 {
                    hes.push(HalfEdge { origin: corners[s], next: base + (s + 1) % 4, twin: Some(twins[s]) });
                }
            }
        }
        CellComplex::build(m * n, hes, None).expect("torus grid is a valid complex")
    }

    pub fn with_labels(mut self, vertex_labels: Vec<Option<String>>, face_labels: BTreeMap<usize, String>) -> Self {
        if vertex_labels.len() == self.num_vertices() {
            self.vertex_labels = vertex_labels;
        }
        self.face_labels = face_labels.into_iter().filter(|(f, _)| *f < self.faces.len()).collect();
        self
    }

    pub fn vertex_labels(&self) -> &[Option<String>] {
        &self.vertex_labels
    }

    pub fn face_labels(&self) -> &BTreeMap<usize, String> {
        &self.face_labels
    }

    pub fn half_edges(&self) -> &[HalfEdge] {
        &self.half_edges
    }

    pub fn num_half_edges(&self) -> usize {
        self.half_edges.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_out.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn origin(&self, h: usize) -> usize {
        self.half_edges[h].origin
    }

    pub fn dest(&self, h: usize) -> usize {
        self.half_edges[self.half_edges[h].next].origin
    }

    pub fn next(&self, h: usize) -> usize {
        self.half_edges[h].next
    }

    pub fn prev(&self, h: usize) -> usize {
        self.prev[h]
    }

    pub fn twin(&self, h: usize) -> Option<usize> {
        self.half_edges[h].twin
    }

    pub fn face_of(&self, h: usize) -> usize {
        self.face_of[h]
    }

    pub fn edge_of(&self, h: usize) -> usize {
        self.edge_of[h]
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Half-edges around face `f`, starting at its smallest half-edge.
    pub fn face(&self, f: usize) -> &[usize] {
        &self.faces[f]
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// Outgoing half-edges at `v` in rotation order. For a boundary vertex
    /// the list starts with the outgoing boundary half-edge.
    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.vertex_out[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        let d = self.vertex_out[v].len();
        if self.is_boundary_vertex(v) {
            d + 1
        } else {
            d
        }
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let g = self.vertex_out[v][0];
        self.half_edges[self.prev[g]].twin.is_none()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edges[e].twin.is_none()
    }

    /// Boundary half-edges of each boundary component, in traversal order.
    pub fn boundary_cycles(&self) -> &[Vec<usize>] {
        &self.boundary_cycles
    }

    /// All boundary half-edges in increasing id order.
    pub fn boundary_half_edges(&self) -> Vec<usize> {
        (0..self.half_edges.len()).filter(|&h| self.half_edges[h].twin.is_none()).collect()
    }

    pub fn has_boundary(&self) -> bool {
        !self.boundary_cycles.is_empty()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    pub fn surface_type(&self) -> SurfaceType {
        let b = self.boundary_cycles.len() as i64;
        let genus = (2 - b - self.euler_characteristic()) / 2;
        SurfaceType { genus: genus as usize, boundary_components: b as usize }
    }

    /// The dual complex: vertex i is face i, half-edge h crosses h from its
    /// face to the face of its twin, and the dual face around the vertex v
    /// of this complex is traced by h ↦ next(twin(h)).
    pub fn dual(&self) -> Result<CellComplex, ComplexError> {
        if self.has_boundary() {
            return Err(ComplexError::HasBoundary);
        }
        let hes = (0..self.half_edges.len())
            .map(|h| {
                let t = self.half_edges[h].twin.expect("closed complex");
                HalfEdge { origin: self.face_of[h], next: self.half_edges[t].next, twin: Some(t) }
            })
            .collect();
        CellComplex::build(self.num_faces(), hes, None)
    }

    /// Dual face of `dual()` that corresponds to vertex `v` of this complex.
    pub fn dual_face_of_vertex(&self, dual: &CellComplex, v: usize) -> usize {
        dual.face_of(self.vertex_out[v][0])
    }

    /// Renumber the complex: `half_perm[h]` is the new id of half-edge h and
    /// `vertex_perm[v]` the new id of vertex v. Faces and edges are then
    /// renumbered canonically; use [`CellComplex::face_of`] on the mapped
    /// half-edges to translate cell data.
    pub fn relabel(&self, vertex_perm: &[usize], half_perm: &[usize]) -> Result<CellComplex, ComplexError> {
        let n = self.half_edges.len();
        let mut hes = vec![HalfEdge { origin: 0, next: 0, twin: None }; n];
        for h in 0..n {
            let he = self.half_edges[h];
            hes[half_perm[h]] =
                HalfEdge { origin: vertex_perm[he.origin], next: half_perm[he.next], twin: he.twin.map(|t| half_perm[t]) };
        }
        CellComplex::build(self.num_vertices(), hes, None)
    }

    /// An isomorphism of rotation systems, as a half-edge map, if one exists.
    pub fn find_isomorphism(&self, other: &CellComplex) -> Option<Vec<usize>> {
        let n = self.half_edges.len();
        if n != other.half_edges.len()
            || self.num_vertices() != other.num_vertices()
            || self.num_faces() != other.num_faces()
        {
            return None;
        }
        'candidates: for target in 0..n {
            let mut map = vec![usize::MAX; n];
            let mut inv = vec![usize::MAX; n];
            let mut stack = vec![(0usize, target)];
            while let Some((a, b)) = stack.pop() {
                if map[a] != usize::MAX {
                    if map[a] != b {
                        continue 'candidates;
                    }
                    continue;
                }
                if inv[b] != usize::MAX {
                    continue 'candidates;
                }
                map[a] = b;
                inv[b] = a;
                stack.push((self.half_edges[a].next, other.half_edges[b].next));
                stack.push((self.prev[a], other.prev[b]));
                match (self.half_edges[a].twin, other.half_edges[b].twin) {
                    (Some(x), Some(y)) => stack.push((x, y)),
                    (None, None) => {}
                    _ => continue 'candidates,
                }
            }
            // Vertices must map consistently.
            let mut vmap = vec![usize::MAX; self.num_vertices()];
            for h in 0..n {
                let (va, vb) = (self.origin(h), other.origin(map[h]));
                if vmap[va] == usize::MAX {
                    vmap[va] = vb;
                } else if vmap[va] != vb {
                    continue 'candidates;
                }
            }
            return Some(map);
        }
        None
    }

    /// The extended graph Γ′ of a complex with boundary.
    pub fn extended_graph(&self) -> Result<ExtendedComplex, ComplexError> {
        if !self.has_boundary() {
            return Err(ComplexError::NoBoundary);
        }
        let bh = self.boundary_half_edges();
        let nb = bh.len();
        let h0 = self.half_edges.len();
        let v0 = self.num_vertices();
        let index: BTreeMap<usize, usize> = bh.iter().enumerate().map(|(k, &h)| (h, k)).collect();
        let next_boundary = |h: usize| {
            let mut k = self.next(h);
            while let Some(t) = self.twin(k) {
                k = self.next(t);
            }
            k
        };
        let prev_boundary: BTreeMap<usize, usize> = bh.iter().map(|&h| (next_boundary(h), h)).collect();
        // Half-edge blocks: t (twin of h), s (spoke out of origin(h)),
        // w (new boundary), r (spoke back to dest(h)).
        let (t_of, s_of, w_of, r_of) = (|k| h0 + k, |k| h0 + nb + k, |k| h0 + 2 * nb + k, |k| h0 + 3 * nb + k);
        let mut hes = self.half_edges.clone();
        hes.resize(h0 + 4 * nb, HalfEdge { origin: 0, next: 0, twin: None });
        for (k, &h) in bh.iter().enumerate() {
            let (a, b) = (self.origin(h), self.dest(h));
            let kn = index[&next_boundary(h)];
            let kp = index[&prev_boundary[&h]];
            hes[h].twin = Some(t_of(k));
            hes[t_of(k)] = HalfEdge { origin: b, next: s_of(k), twin: Some(h) };
            hes[s_of(k)] = HalfEdge { origin: a, next: w_of(k), twin: Some(r_of(kp)) };
            hes[w_of(k)] = HalfEdge { origin: v0 + k, next: r_of(k), twin: None };
            hes[r_of(k)] = HalfEdge { origin: v0 + kn, next: t_of(k), twin: Some(s_of(kn)) };
        }
        let complex = CellComplex::build(v0 + nb, hes, None)?;
        let spoke_edges: Vec<usize> = (0..nb).map(|k| complex.edge_of(s_of(k))).collect();
        let outer_edges: Vec<usize> = (0..nb).map(|k| complex.edge_of(w_of(k))).collect();
        let collar_faces: Vec<usize> = (0..nb).map(|k| complex.face_of(t_of(k))).collect();
        Ok(ExtendedComplex {
            base: self.clone(),
            complex,
            boundary_half_edges: bh.clone(),
            boundary_vertices: (0..nb).map(|k| v0 + k).collect(),
            spoke_edges,
            outer_edges,
            collar_faces,
            base_vertex_of_spoke: bh.iter().map(|&h| self.origin(h)).collect(),
            base_edge_of_outer: bh.iter().map(|&h| self.edge_of(h)).collect(),
        })
    }
}

/// Γ′: the base complex Γ with one collar quadrilateral glued along each
/// boundary edge. Block k refers to the k-th boundary half-edge h_k of Γ
/// (increasing id): boundary vertex g_k sits next to origin(h_k), the spoke
/// joins origin(h_k) to g_k, and the outer edge joins g_k to the next
/// boundary vertex along ∂Σ.
///
/// Ids of Γ cells are preserved: vertices, edges and faces of Γ keep their
/// ids in Γ′, spokes and outer edges come next (spokes first), and collar
/// faces follow the faces of Γ.
#[derive(Clone, Debug)]
pub struct ExtendedComplex {
    pub base: CellComplex,
    pub complex: CellComplex,
    pub boundary_half_edges: Vec<usize>,
    pub boundary_vertices: Vec<usize>,
    pub spoke_edges: Vec<usize>,
    pub outer_edges: Vec<usize>,
    pub collar_faces: Vec<usize>,
    /// Vertex of Γ at the inner end of each spoke (the circle C meeting g).
    pub base_vertex_of_spoke: Vec<usize>,
    /// Boundary edge of Γ bounding each collar face.
    pub base_edge_of_outer: Vec<usize>,
}

impl ExtendedComplex {
    pub fn num_blocks(&self) -> usize {
        self.boundary_half_edges.len()
    }

    pub fn is_base_face(&self, f: usize) -> bool {
        f < self.base.num_faces()
    }

    pub fn is_outer_edge(&self, e: usize) -> bool {
        self.complex.is_boundary_edge(e)
    }

    /// Double along the boundary. `theta` is indexed by edges of Γ′ and
    /// `kappa` by faces of Γ.
    pub fn double(&self, theta: &[Angle], kappa: &[Angle]) -> Result<Doubled, ComplexError> {
        let g = &self.base;
        if theta.len() != self.complex.num_edges() {
            return Err(ComplexError::MissingAngle { cell: format!("edges of Γ′ (expected {})", self.complex.num_edges()) });
        }
        if kappa.len() != g.num_faces() {
            return Err(ComplexError::MissingAngle { cell: format!("faces of Γ (expected {})", g.num_faces()) });
        }
        for (e, t) in theta.iter().enumerate() {
            if !(t.value() > 0.0 && t.value() < std::f64::consts::PI) {
                return Err(ComplexError::AngleOutOfRange { cell: format!("edge {e} of Γ′"), value: t.value() });
            }
        }
        for (f, k) in kappa.iter().enumerate() {
            if !(k.value() < 2.0 * std::f64::consts::PI) {
                return Err(ComplexError::AngleOutOfRange { cell: format!("face {f}"), value: k.value() });
            }
        }
        let h0 = g.num_half_edges();
        let v0 = g.num_vertices();
        let nb = self.num_blocks();
        let index: BTreeMap<usize, usize> =
            self.boundary_half_edges.iter().enumerate().map(|(k, &h)| (h, k)).collect();
        let next_boundary = |h: usize| {
            let mut k = g.next(h);
            while let Some(t) = g.twin(k) {
                k = g.next(t);
            }
            k
        };
        let prev_boundary: BTreeMap<usize, usize> =
            self.boundary_half_edges.iter().map(|&h| (next_boundary(h), h)).collect();
        let mirror = |h: usize| h0 + h;
        let (q1, p, q2, pb) =
            (|k| 2 * h0 + k, |k| 2 * h0 + nb + k, |k| 2 * h0 + 2 * nb + k, |k| 2 * h0 + 3 * nb + k);
        let total = 2 * h0 + 4 * nb;
        let mut hes = vec![HalfEdge { origin: 0, next: 0, twin: None }; total];
        for h in 0..h0 {
            let he = g.half_edges()[h];
            hes[h] = HalfEdge { origin: he.origin, next: he.next, twin: he.twin };
            hes[mirror(h)] =
                HalfEdge { origin: v0 + g.dest(h), next: mirror(g.prev(h)), twin: he.twin.map(mirror) };
        }
        for (k, &h) in self.boundary_half_edges.iter().enumerate() {
            let (a, b) = (g.origin(h), g.dest(h));
            let kn = index[&next_boundary(h)];
            let kp = index[&prev_boundary[&h]];
            hes[h].twin = Some(q1(k));
            hes[mirror(h)].twin = Some(q2(k));
            hes[q1(k)] = HalfEdge { origin: b, next: p(k), twin: Some(h) };
            hes[p(k)] = HalfEdge { origin: a, next: q2(k), twin: Some(pb(kp)) };
            hes[q2(k)] = HalfEdge { origin: v0 + a, next: pb(k), twin: Some(mirror(h)) };
            hes[pb(k)] = HalfEdge { origin: v0 + b, next: q1(k), twin: Some(p(kn)) };
        }
        let complex = CellComplex::build(2 * v0, hes, None)?;

        // Orientation-reversing involution on half-edges: h ↦ reversed mirror image.
        let mut involution = vec![0; total];
        for h in 0..h0 {
            involution[h] = mirror(h);
            involution[mirror(h)] = h;
        }
        for k in 0..nb {
            involution[q1(k)] = q2(k);
            involution[q2(k)] = q1(k);
            involution[p(k)] = p(k);
            involution[pb(k)] = pb(k);
        }

        let mut d_theta = vec![Angle::zero(); complex.num_edges()];
        for e in 0..g.num_edges() {
            let h = g.edge(e).half_edge;
            d_theta[complex.edge_of(h)] = theta[e];
            d_theta[complex.edge_of(mirror(h))] = theta[e];
        }
        let mut spoke_edges = Vec::with_capacity(nb);
        for k in 0..nb {
            let de = complex.edge_of(p(k));
            d_theta[de] = theta[self.spoke_edges[k]] * 2;
            spoke_edges.push(de);
        }
        let mut d_kappa = vec![Angle::zero(); complex.num_faces()];
        for f in 0..g.num_faces() {
            let h = g.face(f)[0];
            d_kappa[complex.face_of(h)] = kappa[f];
            d_kappa[complex.face_of(mirror(h))] = kappa[f];
        }
        let mut collar_faces = Vec::with_capacity(nb);
        for k in 0..nb {
            let df = complex.face_of(q1(k));
            d_kappa[df] = theta[self.outer_edges[k]] * 2;
            collar_faces.push(df);
        }
        let doubled = Doubled {
            complex,
            theta: d_theta,
            kappa: d_kappa,
            involution,
            base_vertices: v0,
            base_half_edges: h0,
            base_faces: g.num_faces(),
            base_edges: g.num_edges(),
            spoke_edges,
            collar_faces,
        };
        doubled.verify_involution().map_err(|h| ComplexError::MalformedTwin { half_edge: h })?;
        Ok(doubled)
    }
}

/// A closed complex D(Γ) obtained by doubling, with its angle data.
///
/// Copy one keeps the ids of Γ (vertices, half-edges, edges, faces); copy two
/// is offset by the corresponding counts of Γ. Spokes of Γ′ become edges
/// joining the two copies of a boundary vertex; collar faces become faces
/// crossing the gluing line.
#[derive(Clone, Debug)]
pub struct Doubled {
    pub complex: CellComplex,
    pub theta: Vec<Angle>,
    pub kappa: Vec<Angle>,
    /// Orientation-reversing involution J on half-edges: J(h) runs along the
    /// mirror image of h in the opposite direction.
    pub involution: Vec<usize>,
    pub base_vertices: usize,
    pub base_half_edges: usize,
    pub base_faces: usize,
    pub base_edges: usize,
    pub spoke_edges: Vec<usize>,
    pub collar_faces: Vec<usize>,
}

impl Doubled {
    /// Mirror image of a vertex.
    pub fn mirror_vertex(&self, v: usize) -> usize {
        if v < self.base_vertices {
            v + self.base_vertices
        } else {
            v - self.base_vertices
        }
    }

    /// Check that the stored involution is an orientation-reversing
    /// automorphism exchanging the copies and fixing the gluing cells.
    /// Returns the first offending half-edge on failure.
    pub fn verify_involution(&self) -> Result<(), usize> {
        let c = &self.complex;
        let j = &self.involution;
        for h in 0..c.num_half_edges() {
            let jh = j[h];
            let ok = j[jh] == h
                && c.next(jh) == j[c.prev(h)]
                && c.twin(jh).map(|t| j[t]) == c.twin(h).map(|t| t)
                && c.twin(h).map(|t| j[t]) == c.twin(jh)
                && c.origin(jh) == self.mirror_vertex(c.dest(h));
            if !ok {
                return Err(h);
            }
        }
        for &e in &self.spoke_edges {
            let h = c.edge(e).half_edge;
            if j[h] != h {
                return Err(h);
            }
        }
        for &f in &self.collar_faces {
            let h = c.face(f)[0];
            if c.face_of(j[h]) != f {
                return Err(h);
            }
        }
        for f in 0..self.base_faces {
            let h = c.face(f)[0];
            if c.face_of(j[h]) != f + self.base_faces {
                return Err(h);
            }
        }
        Ok(())
    }

    /// Image of face `f` under the involution.
    pub fn mirror_face(&self, f: usize) -> usize {
        self.complex.face_of(self.involution[self.complex.face(f)[0]])
    }

    /// Image of edge `e` under the involution.
    pub fn mirror_edge(&self, e: usize) -> usize {
        self.complex.edge_of(self.involution[self.complex.edge(e).half_edge])
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn torus_grid(m: usize, n: usize) -> CellComplex {
        CellComplex::torus_grid(m, n)
    }

    pub fn k4() -> CellComplex {
        CellComplex::from_faces(4, &[vec![0, 1, 2], vec![0, 3, 1], vec![1, 3, 2], vec![0, 2, 3]]).unwrap()
    }

    pub fn cube() -> CellComplex {
        CellComplex::from_faces(
            8,
            &[
                vec![0, 3, 2, 1],
                vec![4, 5, 6, 7],
                vec![0, 1, 5, 4],
                vec![1, 2, 6, 5],
                vec![2, 3, 7, 6],
                vec![3, 0, 4, 7],
            ],
        )
        .unwrap()
    }

    pub fn octahedron() -> CellComplex {
        // Vertices: 0 top, 5 bottom, 1..4 equator.
        CellComplex::from_faces(
            6,
            &[
                vec![0, 1, 2],
                vec![0, 2, 3],
                vec![0, 3, 4],
                vec![0, 4, 1],
                vec![5, 2, 1],
                vec![5, 3, 2],
                vec![5, 4, 3],
                vec![5, 1, 4],
            ],
        )
        .unwrap()
    }

    pub fn square_disk() -> CellComplex {
        CellComplex::from_faces(4, &[vec![0, 1, 2, 3]]).unwrap()
    }

    /// Annulus made of three squares between an inner and an outer triangle.
    pub fn annulus() -> CellComplex {
        CellComplex::from_faces(6, &[vec![0, 1, 4, 3], vec![1, 2, 5, 4], vec![2, 0, 3, 5]]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn euler_characteristics() {
        let t = torus_grid(2, 2);
        assert_eq!((t.num_vertices(), t.num_edges(), t.num_faces()), (4, 8, 4));
        assert_eq!(t.euler_characteristic(), 0);
        assert_eq!(t.surface_type(), SurfaceType { genus: 1, boundary_components: 0 });
        let k = k4();
        assert_eq!(k.euler_characteristic(), 2);
        assert_eq!(square_disk().surface_type(), SurfaceType { genus: 0, boundary_components: 1 });
        assert_eq!(annulus().surface_type(), SurfaceType { genus: 0, boundary_components: 2 });
    }

    #[test]
    fn rejects_self_twin_and_mismatches() {
        let mut hes = k4().half_edges().to_vec();
        hes[0].twin = Some(0);
        assert!(matches!(CellComplex::build(4, hes, None), Err(ComplexError::MalformedTwin { half_edge: 0 })));

        let hes = k4().half_edges().to_vec();
        let decl = SurfaceType { genus: 1, boundary_components: 0 };
        assert!(matches!(CellComplex::build(4, hes, Some(decl)), Err(ComplexError::SurfaceMismatch { .. })));

        // Two disjoint triangles.
        let r = CellComplex::from_faces(6, &[vec![0, 1, 2], vec![0, 2, 1], vec![3, 4, 5], vec![3, 5, 4]]);
        assert!(matches!(r, Err(ComplexError::Disconnected { .. })));

        // A vertex nobody uses.
        let r = CellComplex::from_faces(5, &[vec![0, 1, 2], vec![0, 3, 1], vec![1, 3, 2], vec![0, 2, 3]]);
        assert!(matches!(r, Err(ComplexError::IsolatedVertex { vertex: 4 })));
    }

    #[test]
    fn detects_inconsistent_orientation() {
        // Glue two triangles along an edge with matching directions.
        let hes = vec![
            HalfEdge { origin: 0, next: 1, twin: Some(3) },
            HalfEdge { origin: 1, next: 2, twin: None },
            HalfEdge { origin: 2, next: 0, twin: None },
            HalfEdge { origin: 0, next: 4, twin: Some(0) },
            HalfEdge { origin: 1, next: 5, twin: None },
            HalfEdge { origin: 3, next: 3, twin: None },
        ];
        assert!(matches!(CellComplex::build(4, hes, None), Err(ComplexError::NonOrientable { .. })));
    }

    #[test]
    fn duals() {
        let k = k4();
        let d = k.dual().unwrap();
        assert!(d.find_isomorphism(&k).is_some());
        let t = torus_grid(2, 2);
        assert!(t.dual().unwrap().find_isomorphism(&t).is_some());
        let c = cube();
        let o = c.dual().unwrap();
        assert!(o.find_isomorphism(&octahedron()).is_some());
        assert!(o.find_isomorphism(&c).is_none());
        // Dual of dual is the original, half-edge for half-edge, up to the
        // numbering of vertices.
        let dd = c.dual().unwrap().dual().unwrap();
        for h in 0..c.num_half_edges() {
            assert_eq!(dd.next(h), c.next(h));
            assert_eq!(dd.twin(h), c.twin(h));
            assert_eq!(dd.origin(dd.next(h)) == dd.origin(c.twin(h).unwrap()), true);
        }
        assert!(dd.find_isomorphism(&c).is_some());
        assert!(matches!(square_disk().dual(), Err(ComplexError::HasBoundary)));
    }

    #[test]
    fn dual_counts() {
        for c in [k4(), cube(), torus_grid(2, 2), torus_grid(3, 2)] {
            let d = c.dual().unwrap();
            assert_eq!(d.num_edges(), c.num_edges());
            assert_eq!(d.num_vertices(), c.num_faces());
            assert_eq!(d.num_faces(), c.num_vertices());
            for v in 0..c.num_vertices() {
                assert_eq!(d.face(c.dual_face_of_vertex(&d, v)).len(), c.degree(v));
            }
        }
    }

    #[test]
    fn extended_graph_of_square_and_annulus() {
        let x = square_disk().extended_graph().unwrap();
        assert_eq!(x.boundary_vertices.len(), 4);
        assert_eq!(x.spoke_edges.len(), 4);
        assert_eq!(x.outer_edges.len(), 4);
        assert_eq!(x.complex.boundary_cycles().len(), 1);
        assert_eq!(x.complex.boundary_cycles()[0].len(), 4);
        assert_eq!(x.complex.euler_characteristic(), 1);
        // Spokes first, then outer edges, after the edges of Γ.
        assert_eq!(x.spoke_edges, vec![4, 5, 6, 7]);
        assert_eq!(x.outer_edges, vec![8, 9, 10, 11]);
        for (k, &e) in x.spoke_edges.iter().enumerate() {
            let ed = x.complex.edge(e);
            let ends = [x.complex.origin(ed.half_edge), x.complex.dest(ed.half_edge)];
            assert!(ends.contains(&x.boundary_vertices[k]));
            assert!(ends.contains(&x.base_vertex_of_spoke[k]));
        }
        let a = annulus().extended_graph().unwrap();
        assert_eq!(a.boundary_vertices.len(), 6);
        let cycles = a.complex.boundary_cycles();
        assert_eq!(cycles.len(), 2);
        assert!(cycles.iter().all(|c| c.len() == 3));
        assert!(matches!(torus_grid(2, 2).extended_graph(), Err(ComplexError::NoBoundary)));
    }

    fn angles(n: usize, a: Angle) -> Vec<Angle> {
        vec![a; n]
    }

    #[test]
    fn doubling_square_disk_gives_cube() {
        let x = square_disk().extended_graph().unwrap();
        let theta = angles(x.complex.num_edges(), Angle::pi_frac(1, 3));
        let d = x.double(&theta, &[Angle::zero()]).unwrap();
        assert_eq!(d.complex.euler_characteristic(), 2);
        assert!(d.complex.find_isomorphism(&cube()).is_some());
        for &f in &d.collar_faces {
            assert_eq!(d.kappa[f].exact(), Some(num_rational::Rational64::new(2, 3)));
        }
        for &e in &d.spoke_edges {
            assert_eq!(d.theta[e].exact(), Some(num_rational::Rational64::new(2, 3)));
        }
        d.verify_involution().unwrap();
    }

    #[test]
    fn doubling_with_right_angles_produces_straight_spokes() {
        // With every Γ′ angle π/2 the spokes double to π; doubling itself
        // only checks the inputs, and the validator rejects θ = π later.
        let x = square_disk().extended_graph().unwrap();
        let d = x.double(&angles(x.complex.num_edges(), Angle::pi_frac(1, 2)), &[Angle::zero()]).unwrap();
        for &f in &d.collar_faces {
            assert_eq!(d.kappa[f].exact(), Some(num_rational::Rational64::new(1, 1)));
        }
        assert!(x.double(&angles(x.complex.num_edges(), Angle::pi_frac(1, 1)), &[Angle::zero()]).is_err());
    }

    #[test]
    fn doubling_annulus_gives_torus() {
        let x = annulus().extended_graph().unwrap();
        let d = x.double(&angles(x.complex.num_edges(), Angle::pi_frac(1, 3)), &angles(3, Angle::zero())).unwrap();
        assert_eq!(d.complex.euler_characteristic(), 0);
        assert_eq!(d.complex.surface_type().genus, 1);
        assert_eq!(d.complex.num_vertices(), 2 * annulus().num_vertices());
    }

    #[test]
    fn broken_involution_is_detected() {
        let x = square_disk().extended_graph().unwrap();
        let mut d = x.double(&angles(x.complex.num_edges(), Angle::pi_frac(1, 3)), &[Angle::zero()]).unwrap();
        d.involution.swap(0, 1);
        assert!(d.verify_involution().is_err());
    }

    proptest! {
        #[test]
        fn relabelling_preserves_isomorphism_type(seed in 0u64..500) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for c in [k4(), torus_grid(2, 3), annulus()] {
                let mut vp: Vec<usize> = (0..c.num_vertices()).collect();
                vp.shuffle(&mut rng);
                let mut hp: Vec<usize> = (0..c.num_half_edges()).collect();
                hp.shuffle(&mut rng);
                let r = c.relabel(&vp, &hp).unwrap();
                let m = c.find_isomorphism(&r);
                prop_assert!(m.is_some());
                prop_assert_eq!(r.euler_characteristic(), c.euler_characteristic());
                if c.has_boundary() {
                    let x = c.extended_graph().unwrap();
                    let th = vec![Angle::pi_frac(1, 4); x.complex.num_edges()];
                    let d = x.double(&th, &vec![Angle::zero(); c.num_faces()]).unwrap();
                    prop_assert_eq!(d.complex.euler_characteristic(), 2 * c.euler_characteristic());
                }
            }
        }
    }
}

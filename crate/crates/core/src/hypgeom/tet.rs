//! Ideal/hyperideal tetrahedra built from their interior dihedral angles.

use super::{
    mdot, normalize_spacelike, normalize_timelike, orthoscheme, quadrature, slots_at_vertex,
    GeomError, MinkVec, VertexKind, EDGES,
};
use nalgebra::{Matrix4, SymmetricEigen};
use serde::Serialize;
use std::f64::consts::PI;

/// Tolerance on the link sum of a vertex declared ideal.
pub const IDEAL_SUM_TOL: f64 = 1e-9;
/// Eigenvalue threshold of the Gram signature test.
pub const SIGNATURE_EPS: f64 = 1e-10;

/// How horospheres at ideal vertices are chosen when measuring lengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HoroConvention {
    /// Each ideal vertex's horosphere is tangent to the opposite face.
    Canonical,
    /// The canonical horospheres rescaled by the given positive factors
    /// (entries at hyperideal vertices are ignored).
    Scales { scales: [f64; 4] },
    /// `apex` (ideal) keeps its canonical horosphere, tangent to the opposite
    /// face; every other ideal vertex gets the horosphere tangent to it.
    TangentToApexHorosphere { apex: usize },
    /// Every ideal vertex gets the horosphere tangent to the plane dual to
    /// the hyperideal vertex `of`.
    TangentToDualPlane { of: usize },
}

/// A tetrahedron whose vertices are ideal or strictly hyperideal.
///
/// Face `i` is opposite vertex `i`; `normals[i]` is its outward unit normal,
/// so the tetrahedron is `{⟨x, nᵢ⟩ ≤ 0 for all i}`. Ideal vertices are stored
/// with ⟨vᵢ, nᵢ⟩ = −1 (the horosphere {⟨x, vᵢ⟩ = −1} is then tangent to the
/// opposite face); hyperideal vertices are unit spacelike.
#[derive(Clone, Debug)]
pub struct HyperidealTet {
    pub interior_angles: [f64; 6],
    pub kinds: [VertexKind; 4],
    pub normals: [MinkVec; 4],
    pub vertices: [MinkVec; 4],
    pub horo: HoroConvention,
}

/// JSON dump of a tetrahedron, for debugging.
#[derive(Debug, Serialize)]
pub struct TetDump {
    pub interior_angles: [f64; 6],
    pub kinds: [VertexKind; 4],
    pub normals: Vec<[f64; 4]>,
    pub vertices: Vec<[f64; 4]>,
    pub horo: HoroConvention,
    pub lengths: [f64; 6],
    pub volume: f64,
}

fn link_sum(angles: &[f64; 6], v: usize) -> f64 {
    slots_at_vertex(v).iter().map(|&e| angles[e]).sum()
}

/// Gram matrix of the face normals: Gᵢᵢ = 1, Gᵢⱼ = −cos(angle at the edge
/// shared by faces i and j).
pub fn gram_matrix(angles: &[f64; 6]) -> Matrix4<f64> {
    let mut g = Matrix4::identity();
    for (e, &(a, b)) in EDGES.iter().enumerate() {
        // Edge `e` joins vertices a, b; it lies on the faces opposite the
        // complementary pair.
        let (c, d) = EDGES[5 - e];
        let _ = (a, b);
        g[(c, d)] = -angles[e].cos();
        g[(d, c)] = g[(c, d)];
    }
    g
}

impl HyperidealTet {
    /// Build the tetrahedron from six interior dihedral angles (indexed by
    /// [`EDGES`]) and the declared vertex kinds.
    pub fn from_angles(angles: [f64; 6], kinds: [VertexKind; 4]) -> Result<Self, GeomError> {
        for (e, &a) in angles.iter().enumerate() {
            if !(a > 0.0 && a < PI) || !a.is_finite() {
                return Err(GeomError::InfeasibleAngles(format!(
                    "angle at edge {:?} is {a}, outside (0, π)",
                    EDGES[e]
                )));
            }
        }
        for v in 0..4 {
            let s = link_sum(&angles, v);
            match kinds[v] {
                VertexKind::Ideal if (s - PI).abs() > IDEAL_SUM_TOL => {
                    return Err(GeomError::InfeasibleAngles(format!(
                        "vertex {v} declared ideal but its link angles sum to {s} ≠ π"
                    )));
                }
                VertexKind::Hyperideal if s >= PI => {
                    return Err(GeomError::InfeasibleAngles(format!(
                        "vertex {v} link angles sum to {s} ≥ π (vertex would be finite or ideal)"
                    )));
                }
                _ => {}
            }
        }

        let g = gram_matrix(&angles);
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..4).collect();
        // Positive eigenvalues first, the negative one last.
        order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
        let ev: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let positives = ev.iter().filter(|&&l| l > SIGNATURE_EPS).count();
        let negatives = ev.iter().filter(|&&l| l < -SIGNATURE_EPS).count();
        if positives != 3 || negatives != 1 {
            return Err(GeomError::InfeasibleAngles(format!(
                "Gram matrix signature is ({positives},{negatives}), eigenvalues {ev:?}; expected (3,1)"
            )));
        }
        // M has the normals as columns: Mᵀ J M = G.
        let mut m = Matrix4::zeros();
        for (r, &i) in order.iter().enumerate() {
            let s = eig.eigenvalues[i].abs().sqrt();
            for c in 0..4 {
                m[(r, c)] = s * eig.eigenvectors[(c, i)];
            }
        }
        // Refine: with E = G − MᵀJM, the update M += ½ J M^{-T} E cancels the
        // residual to first order. Two sweeps bring it to rounding level.
        let j = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        for _ in 0..2 {
            let e = g - m.transpose() * j * m;
            let Some(mi) = m.try_inverse() else { break };
            m += 0.5 * j * mi.transpose() * e;
        }
        let m_inv = m
            .try_inverse()
            .ok_or_else(|| GeomError::InfeasibleAngles("singular normal frame".into()))?;
        let mut normals = [MinkVec::zeros(); 4];
        let mut vertices = [MinkVec::zeros(); 4];
        for i in 0..4 {
            normals[i] = m.column(i).into_owned();
            // v with ⟨v, n_j⟩ = −δ_ij: J v = −M^{-T} e_i.
            let row = m_inv.row(i).transpose();
            vertices[i] = -super::flip_time(&row);
        }

        // Every edge must cross hyperbolic space: ⟨v_a, v_b⟩ < 0, and < −1
        // for two unit hyperideal vertices.
        for v in 0..4 {
            let q = mdot(&vertices[v], &vertices[v]);
            match kinds[v] {
                VertexKind::Hyperideal => {
                    if q <= 0.0 {
                        return Err(GeomError::InfeasibleAngles(format!(
                            "vertex {v} is not beyond the sphere at infinity (⟨v,v⟩ = {q})"
                        )));
                    }
                    vertices[v] = normalize_spacelike(&vertices[v]);
                }
                VertexKind::Ideal => {}
            }
        }
        for &(a, b) in &EDGES {
            let p = mdot(&vertices[a], &vertices[b]);
            let bound = if kinds[a] == VertexKind::Hyperideal && kinds[b] == VertexKind::Hyperideal {
                -1.0
            } else {
                0.0
            };
            if p >= bound {
                return Err(GeomError::InfeasibleAngles(format!(
                    "edge ({a},{b}) does not meet hyperbolic space (⟨v_a,v_b⟩ = {p})"
                )));
            }
        }

        // Fix the time orientation: the cone spanned by the vertices must be
        // future-directed. Test with a point of the tetrahedron's closure.
        let probe = match (0..4).find(|&v| kinds[v] == VertexKind::Ideal) {
            Some(v) => vertices[v],
            None => vertices[1] - mdot(&vertices[1], &vertices[0]) * vertices[0],
        };
        if probe[3] < 0.0 {
            for i in 0..4 {
                normals[i] = super::flip_time(&normals[i]);
                vertices[i] = super::flip_time(&vertices[i]);
            }
        }

        Ok(HyperidealTet { interior_angles: angles, kinds, normals, vertices, horo: HoroConvention::Canonical })
    }

    /// Same tetrahedron with a different horosphere convention.
    pub fn with_horo(mut self, horo: HoroConvention) -> Self {
        self.horo = horo;
        self
    }

    /// Interior angles recomputed from the face normals.
    pub fn angles_from_normals(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (e, slot) in out.iter_mut().enumerate() {
            let (c, d) = EDGES[5 - e];
            *slot = (-mdot(&self.normals[c], &self.normals[d])).clamp(-1.0, 1.0).acos();
        }
        out
    }

    /// Effective horosphere scale factor at vertex `v` (1 for hyperideal).
    pub fn horo_scale(&self, v: usize) -> f64 {
        if self.kinds[v] == VertexKind::Hyperideal {
            return 1.0;
        }
        match self.horo {
            HoroConvention::Canonical => 1.0,
            HoroConvention::Scales { scales } => scales[v],
            HoroConvention::TangentToApexHorosphere { apex } => {
                if v == apex {
                    1.0
                } else {
                    2.0 / -mdot(&self.vertices[apex], &self.vertices[v])
                }
            }
            HoroConvention::TangentToDualPlane { of } => 1.0 / -mdot(&self.vertices[v], &self.vertices[of]),
        }
    }

    /// Vertex vector with the horosphere scale applied to ideal vertices.
    pub fn scaled_vertex(&self, v: usize) -> MinkVec {
        self.vertices[v] * self.horo_scale(v)
    }

    /// Length of the edge slot `e` between the truncating objects at its
    /// endpoints (dual planes or horospheres); negative if horospheres overlap.
    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = EDGES[e];
        let (va, vb) = (self.scaled_vertex(a), self.scaled_vertex(b));
        let p = -mdot(&va, &vb);
        match (self.kinds[a], self.kinds[b]) {
            (VertexKind::Hyperideal, VertexKind::Hyperideal) => p.max(1.0).acosh(),
            (VertexKind::Ideal, VertexKind::Ideal) => (p / 2.0).ln(),
            _ => p.ln(),
        }
    }

    pub fn edge_lengths(&self) -> [f64; 6] {
        std::array::from_fn(|e| self.edge_length(e))
    }

    /// Volume of the truncated tetrahedron (orthoscheme engine).
    pub fn truncated_volume(&self) -> f64 {
        orthoscheme::truncated_volume(self)
    }

    /// Volume of the truncated tetrahedron (Klein-model quadrature engine).
    pub fn truncated_volume_quadrature(&self, opts: &quadrature::QuadratureOptions) -> f64 {
        quadrature::truncated_volume(self, opts)
    }

    /// Derivative of the volume with respect to the exterior angle at each
    /// edge: `l_e / 2`. For tetrahedra with ideal vertices this is meaningful
    /// along deformations keeping the ideal vertices ideal, where the
    /// horosphere choice drops out.
    pub fn schlafli_gradient(&self) -> [f64; 6] {
        self.edge_lengths().map(|l| l / 2.0)
    }

    /// Gradient of the volume with respect to the interior angles, `−l_e/2`.
    pub fn volume_gradient_interior(&self) -> [f64; 6] {
        self.edge_lengths().map(|l| -l / 2.0)
    }

    pub fn dump(&self) -> TetDump {
        TetDump {
            interior_angles: self.interior_angles,
            kinds: self.kinds,
            normals: self.normals.iter().map(|n| [n[0], n[1], n[2], n[3]]).collect(),
            vertices: self.vertices.iter().map(|n| [n[0], n[1], n[2], n[3]]).collect(),
            horo: self.horo,
            lengths: self.edge_lengths(),
            volume: self.truncated_volume(),
        }
    }

    /// A point in the interior of the truncated tetrahedron.
    pub fn interior_point(&self) -> MinkVec {
        let mut acc = MinkVec::zeros();
        for (p, _) in orthoscheme::truncated_vertices(self) {
            acc += p / p[3];
        }
        normalize_timelike(&acc)
    }
}

/// Orthonormal basis (6 × k, as columns) of interior-angle deformations
/// that keep the link sums at the listed vertices fixed.
pub fn tangent_basis(kinds: &[VertexKind; 4]) -> nalgebra::DMatrix<f64> {
    let ideal: Vec<usize> = (0..4).filter(|&v| kinds[v] == VertexKind::Ideal).collect();
    let mut a = nalgebra::DMatrix::zeros(ideal.len().max(1), 6);
    for (r, &v) in ideal.iter().enumerate() {
        for e in slots_at_vertex(v) {
            a[(r, e)] = 1.0;
        }
    }
    if ideal.is_empty() {
        return nalgebra::DMatrix::identity(6, 6);
    }
    crate::linalg::null_space(&a, 1e-10)
}

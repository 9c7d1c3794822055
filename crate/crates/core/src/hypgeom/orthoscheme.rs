//! Volume of truncated tetrahedra by orthoscheme decomposition.
//!
//! The truncated polytope Pₜ is coned from an interior point O over each of
//! its faces; each cone is cut into orthoschemes (O, F_O, E_O, W) where F_O
//! is the foot of O on the face, E_O the foot of F_O on a face edge and W an
//! endpoint of that edge. Orthoscheme volumes use the Lobachevsky-function
//! formula in terms of the three essential dihedral angles; signs account for
//! feet falling outside their face or edge.

use super::{
    hyp_distance, lobachevsky, mdot, mink_cross, normalize_spacelike, normalize_timelike, HyperidealTet,
    MinkVec, VertexKind,
};
use std::f64::consts::FRAC_PI_2;

/// A point of the closure of Pₜ: a future timelike unit vector, or a
/// future lightlike vector for an ideal vertex (flag `true`).
pub type PolyPoint = (MinkVec, bool);

/// A face of the truncated polytope.
#[derive(Clone, Debug)]
pub struct PolyFace {
    /// Outward unit normal; the polytope lies in {⟨x, normal⟩ ≤ 0}.
    pub normal: MinkVec,
    /// Vertices in cyclic order.
    pub vertices: Vec<PolyPoint>,
    /// Outward normal of the face adjacent across the side `vertices[k] → vertices[k+1]`.
    pub neighbors: Vec<MinkVec>,
}

fn truncation_point(tet: &HyperidealTet, i: usize, j: usize) -> MinkVec {
    let (vi, vj) = (tet.vertices[i], tet.vertices[j]);
    normalize_timelike(&(vj - mdot(&vj, &vi) * vi))
}

fn ideal_point(tet: &HyperidealTet, i: usize) -> MinkVec {
    let u = tet.vertices[i];
    u / u[3]
}

/// Vertices of the truncated polytope.
pub fn truncated_vertices(tet: &HyperidealTet) -> Vec<PolyPoint> {
    let mut out = Vec::new();
    for i in 0..4 {
        match tet.kinds[i] {
            VertexKind::Ideal => out.push((ideal_point(tet, i), true)),
            VertexKind::Hyperideal => {
                for j in 0..4 {
                    if j != i {
                        out.push((truncation_point(tet, i, j), false));
                    }
                }
            }
        }
    }
    out
}

/// Faces of the truncated polytope: the four (possibly truncated) original
/// faces followed by one triangle per hyperideal vertex.
pub fn truncated_faces(tet: &HyperidealTet) -> Vec<PolyFace> {
    let mut faces = Vec::new();
    for k in 0..4 {
        let cyc: Vec<usize> = (0..4).filter(|&j| j != k).collect();
        let mut verts = Vec::new();
        let mut nbrs = Vec::new();
        for idx in 0..3 {
            let j = cyc[idx];
            let prev = cyc[(idx + 2) % 3];
            let next = cyc[(idx + 1) % 3];
            match tet.kinds[j] {
                VertexKind::Ideal => {
                    verts.push((ideal_point(tet, j), true));
                }
                VertexKind::Hyperideal => {
                    verts.push((truncation_point(tet, j, prev), false));
                    nbrs.push(tet.vertices[j]);
                    verts.push((truncation_point(tet, j, next), false));
                }
            }
            // Side along the original edge (j, next): the other face through
            // it is the one opposite `prev`.
            nbrs.push(tet.normals[prev]);
        }
        faces.push(PolyFace { normal: tet.normals[k], vertices: verts, neighbors: nbrs });
    }
    for i in 0..4 {
        if tet.kinds[i] != VertexKind::Hyperideal {
            continue;
        }
        let others: Vec<usize> = (0..4).filter(|&j| j != i).collect();
        let mut verts = Vec::new();
        let mut nbrs = Vec::new();
        for idx in 0..3 {
            let j = others[idx];
            let m = others[(idx + 2) % 3];
            verts.push((truncation_point(tet, i, j), false));
            // Side p_{i→j} → p_{i→l} lies on the face through i, j, l.
            nbrs.push(tet.normals[m]);
        }
        faces.push(PolyFace { normal: tet.vertices[i], vertices: verts, neighbors: nbrs });
    }
    faces
}

/// Volume of the orthoscheme with essential dihedral angles α₁, α₂, α₃
/// (Kellerhals' formula).
pub fn orthoscheme_volume(a1: f64, a2: f64, a3: f64) -> f64 {
    let disc = (a2.cos().powi(2) - (a1.sin() * a3.sin()).powi(2)).max(0.0);
    let delta = disc.sqrt().atan2(a1.cos() * a3.cos());
    let l = lobachevsky;
    0.25 * (l(a1 + delta) - l(a1 - delta) + l(a3 + delta) - l(a3 - delta) - l(FRAC_PI_2 - a2 + delta)
        + l(FRAC_PI_2 - a2 - delta)
        + 2.0 * l(FRAC_PI_2 - delta))
}

/// Volume of the orthoscheme with vertex chain P0-P1-P2-P3 (P3 may be ideal).
fn chain_volume(p: [MinkVec; 4]) -> f64 {
    // Outward normals of the faces opposite each vertex.
    let mut m = [MinkVec::zeros(); 4];
    for k in 0..4 {
        let o: Vec<usize> = (0..4).filter(|&j| j != k).collect();
        let mut n = mink_cross(&p[o[0]], &p[o[1]], &p[o[2]]);
        if mdot(&n, &p[k]) > 0.0 {
            n = -n;
        }
        m[k] = normalize_spacelike(&n);
    }
    let ang = |a: usize, b: usize| (-mdot(&m[a], &m[b])).clamp(-1.0, 1.0).acos();
    let a1 = ang(0, 1); // at edge P2P3
    let a2 = ang(1, 2); // at edge P0P3
    let a3 = ang(2, 3); // at edge P0P1
    orthoscheme_volume(a1, a2, a3)
}

/// Foot of the timelike point `x` on the line spanned by `a`, `b`, returned
/// with its coefficients (α, β) in x_foot ∝ α a + β b.
fn foot_on_line(x: &MinkVec, a: &MinkVec, b: &MinkVec) -> (MinkVec, f64, f64) {
    let (aa, ab, bb) = (mdot(a, a), mdot(a, b), mdot(b, b));
    let (xa, xb) = (mdot(x, a), mdot(x, b));
    let det = aa * bb - ab * ab;
    let alpha = (xa * bb - xb * ab) / det;
    let beta = (xb * aa - xa * ab) / det;
    let y = alpha * a + beta * b;
    // The projection of a future point onto a timelike 2-plane is future
    // up to the overall sign of the coefficients.
    let s = if y[3] < 0.0 { -1.0 } else { 1.0 };
    (normalize_timelike(&y), s * alpha, s * beta)
}

const DEGENERATE: f64 = 1e-14;

/// Volume of the truncated tetrahedron Pₜ.
pub fn truncated_volume(tet: &HyperidealTet) -> f64 {
    let o = tet.interior_point();
    truncated_volume_from(tet, &o)
}

/// Same as [`truncated_volume`] with an explicit interior cone point.
pub fn truncated_volume_from(tet: &HyperidealTet, o: &MinkVec) -> f64 {
    let mut total = 0.0;
    for face in truncated_faces(tet) {
        let n = face.normal;
        let h = mdot(o, &n);
        // O must be strictly inside; h < 0.
        let f_o = normalize_timelike(&(o - h * n));
        let nv = face.vertices.len();
        for k in 0..nv {
            let (a, a_ideal) = face.vertices[k];
            let (b, b_ideal) = face.vertices[(k + 1) % nv];
            let side_sign = if mdot(&f_o, &face.neighbors[k]) < 0.0 { 1.0 } else { -1.0 };
            let (e_o, alpha, beta) = foot_on_line(&f_o, &a, &b);
            if hyp_distance(&f_o, &e_o) < DEGENERATE {
                continue;
            }
            for (w, w_ideal, sign) in [(b, b_ideal, alpha.signum()), (a, a_ideal, beta.signum())] {
                if !w_ideal && hyp_distance(&e_o, &w) < DEGENERATE {
                    continue;
                }
                total += side_sign * sign * chain_volume([*o, f_o, e_o, w]);
            }
        }
    }
    total
}

//! Hyperideal triangles in the hyperbolic plane (Minkowski space R^{2,1}).
//!
//! A hyperideal triangle is determined up to isometry by its three edge
//! lengths and vertex kinds: the lengths fix every pairing ⟨vᵢ, vⱼ⟩ of the
//! normalized vertex vectors, and a Gram matrix of signature (2,1)
//! determines the vectors up to a Lorentz transformation. This is the
//! routine used to check that faces glued along the cone complex match.

use super::{GeomError, VertexKind};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};

/// ⟨x,y⟩ = x₁y₁ + x₂y₂ − x₃y₃.
pub fn mdot3(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

/// Edge slots of a triangle: (0,1), (0,2), (1,2).
pub const TRI_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Clone, Debug)]
pub struct HyperidealTriangle {
    pub kinds: [VertexKind; 3],
    /// Unit spacelike (hyperideal) or lightlike with the horosphere
    /// {⟨x, v⟩ = −1} (ideal) vertex vectors.
    pub vertices: [Vector3<f64>; 3],
}

fn pairing(l: f64, ka: VertexKind, kb: VertexKind) -> f64 {
    match (ka, kb) {
        (VertexKind::Hyperideal, VertexKind::Hyperideal) => -l.cosh(),
        (VertexKind::Ideal, VertexKind::Ideal) => -2.0 * l.exp(),
        _ => -l.exp(),
    }
}

impl HyperidealTriangle {
    /// Reconstruct a triangle from its edge lengths, indexed by [`TRI_EDGES`].
    pub fn from_lengths(lengths: [f64; 3], kinds: [VertexKind; 3]) -> Result<Self, GeomError> {
        let mut h = Matrix3::zeros();
        for i in 0..3 {
            h[(i, i)] = if kinds[i] == VertexKind::Hyperideal { 1.0 } else { 0.0 };
        }
        for (e, &(a, b)) in TRI_EDGES.iter().enumerate() {
            if kinds[a] == VertexKind::Hyperideal && kinds[b] == VertexKind::Hyperideal && lengths[e] <= 0.0 {
                return Err(GeomError::InfeasibleAngles(format!(
                    "distance between dual lines must be positive, got {}",
                    lengths[e]
                )));
            }
            h[(a, b)] = pairing(lengths[e], kinds[a], kinds[b]);
            h[(b, a)] = h[(a, b)];
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
        let ev: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        if !(ev[0] > 1e-12 && ev[1] > 1e-12 && ev[2] < -1e-12) {
            return Err(GeomError::InfeasibleAngles(format!(
                "vertex Gram matrix has eigenvalues {ev:?}, not signature (2,1)"
            )));
        }
        // Rows of V are scaled eigenvectors, negative one last: Vᵀ J V = H.
        let mut v = Matrix3::zeros();
        for (r, &i) in order.iter().enumerate() {
            let s = eig.eigenvalues[i].abs().sqrt();
            for c in 0..3 {
                v[(r, c)] = s * eig.eigenvectors[(c, i)];
            }
        }
        let vertices = [v.column(0).into_owned(), v.column(1).into_owned(), v.column(2).into_owned()];
        Ok(HyperidealTriangle { kinds, vertices })
    }

    /// Edge lengths, indexed by [`TRI_EDGES`].
    pub fn lengths(&self) -> [f64; 3] {
        std::array::from_fn(|e| {
            let (a, b) = TRI_EDGES[e];
            let p = -mdot3(&self.vertices[a], &self.vertices[b]);
            match (self.kinds[a], self.kinds[b]) {
                (VertexKind::Hyperideal, VertexKind::Hyperideal) => p.max(1.0).acosh(),
                (VertexKind::Ideal, VertexKind::Ideal) => (p / 2.0).ln(),
                _ => p.ln(),
            }
        })
    }
}

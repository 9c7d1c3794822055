//! Minkowski-model geometry of ideal and hyperideal tetrahedra.
//!
//! Vectors live in R^{3,1} with ⟨x,y⟩ = x₁y₁ + x₂y₂ + x₃y₃ − x₄y₄.
//! Hyperbolic points satisfy ⟨x,x⟩ = −1, ideal points are lightlike and
//! hyperideal points (equivalently, oriented planes) are unit spacelike.
//!
//! Angle convention: everything in this module is stated in *interior*
//! dihedral angles. The exterior angle used by the circle-pattern layer is
//! `π − interior`; that conversion happens only in the solver targets.

pub mod lobachevsky;
pub mod orthoscheme;
pub mod quadrature;
pub mod tet;
pub mod sampling;
pub mod triangle;

use nalgebra::Vector4;
use thiserror::Error;

pub use lobachevsky::lobachevsky;
pub use tet::{HoroConvention, HyperidealTet, TetDump};
pub use triangle::HyperidealTriangle;

/// A vector of R^{3,1}.
pub type MinkVec = Vector4<f64>;

/// Local edge slots of an abstract tetrahedron, as vertex pairs.
///
/// Slot `e` joins vertices `EDGES[e]`; it lies on the two faces opposite the
/// complementary vertex pair `EDGES[5 - e]`.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Slot index of the edge joining vertices `a` and `b`.
pub fn edge_slot(a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    EDGES.iter().position(|&p| p == (a, b)).expect("distinct tetrahedron vertices")
}

/// The three edge slots through vertex `v`.
pub fn slots_at_vertex(v: usize) -> [usize; 3] {
    let mut out = [0; 3];
    let mut k = 0;
    for (e, &(a, b)) in EDGES.iter().enumerate() {
        if a == v || b == v {
            out[k] = e;
            k += 1;
        }
    }
    out
}

/// Whether a vertex of a tetrahedron lies on the sphere at infinity or beyond it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Ideal,
    Hyperideal,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("infeasible angles: {0}")]
    InfeasibleAngles(String),
    #[error("vector is not spacelike (⟨x,x⟩ = {0})")]
    NotSpacelike(f64),
}

/// Minkowski bilinear form.
#[inline]
pub fn mdot(a: &MinkVec, b: &MinkVec) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] - a[3] * b[3]
}

/// Apply the metric J = diag(1,1,1,−1).
#[inline]
pub fn flip_time(a: &MinkVec) -> MinkVec {
    MinkVec::new(a[0], a[1], a[2], -a[3])
}

/// Normalize a timelike vector to the future sheet of the hyperboloid.
pub fn normalize_timelike(x: &MinkVec) -> MinkVec {
    let n = (-mdot(x, x)).sqrt();
    let y = x / n;
    if y[3] < 0.0 {
        -y
    } else {
        y
    }
}

/// Normalize a spacelike vector to ⟨x,x⟩ = 1 (keeping its direction).
pub fn normalize_spacelike(x: &MinkVec) -> MinkVec {
    x / mdot(x, x).sqrt()
}

/// Minkowski normal of the hyperplane spanned by three vectors:
/// the vector m with ⟨m, x⟩ = det[a, b, c, x] for all x.
pub fn mink_cross(a: &MinkVec, b: &MinkVec, c: &MinkVec) -> MinkVec {
    let m = nalgebra::Matrix4::from_columns(&[*a, *b, *c, MinkVec::zeros()]);
    let mut w = MinkVec::zeros();
    for i in 0..4 {
        // Cofactor expansion along the last column.
        let mut minor = nalgebra::Matrix3::zeros();
        let mut r = 0;
        for row in 0..4 {
            if row == i {
                continue;
            }
            for col in 0..3 {
                minor[(r, col)] = m[(row, col)];
            }
            r += 1;
        }
        let sign = if (i + 3) % 2 == 0 { 1.0 } else { -1.0 };
        w[i] = sign * minor.determinant();
    }
    flip_time(&w)
}

/// Hyperbolic distance between two points of the hyperboloid, computed in a
/// cancellation-free way from the chord length.
pub fn hyp_distance(x: &MinkVec, y: &MinkVec) -> f64 {
    let d = x - y;
    let q = mdot(&d, &d).max(0.0);
    2.0 * (q.sqrt() / 2.0).asinh()
}

/// The point dual to a plane with unit spacelike normal `n`.
///
/// In the projective model the pole of a plane and the plane's normal are the
/// same vector of R^{3,1}, so duality is the identity on unit spacelike
/// vectors; the functions exist to make that identification explicit and to
/// validate inputs.
pub fn dual_point(plane_normal: &MinkVec) -> Result<MinkVec, GeomError> {
    let q = mdot(plane_normal, plane_normal);
    if q <= 1e-12 {
        return Err(GeomError::NotSpacelike(q));
    }
    Ok(plane_normal / q.sqrt())
}

/// The plane (as unit normal) dual to a hyperideal point.
pub fn dual_plane(point: &MinkVec) -> Result<MinkVec, GeomError> {
    dual_point(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duality_is_an_involution() {
        let n = MinkVec::new(1.3, -0.2, 0.7, 0.9);
        let n = normalize_spacelike(&n);
        let back = dual_plane(&dual_point(&n).unwrap()).unwrap();
        assert!((back - n).norm() < 1e-15);
        assert!(matches!(
            dual_point(&MinkVec::new(0.0, 0.0, 0.0, 1.0)),
            Err(GeomError::NotSpacelike(_))
        ));
    }

    #[test]
    fn dual_plane_of_sample_point() {
        let x = MinkVec::new(2f64.sqrt(), 0.0, 0.0, 1.0);
        let p = dual_plane(&x).unwrap();
        // Points p on the hyperboloid with ⟨p, x⟩ = 0: x-coordinate = x4/√2.
        for &(y, z) in &[(0.0, 0.0), (0.5, -1.0), (2.0, 0.3)] {
            // Solve for t with ⟨(t, y, z, w), x⟩ = 0 and w² = 1 + t² + y² + z².
            // √2 t = w  ⇒  t² = 1 + y² + z².
            let t = (1.0f64 + y * y + z * z).sqrt();
            let w = 2f64.sqrt() * t;
            let q = MinkVec::new(t, y, z, w);
            assert!((mdot(&q, &q) + 1.0).abs() < 1e-12);
            assert!(mdot(&q, &p).abs() < 1e-12);
        }
    }

    #[test]
    fn lines_through_hyperideal_point_meet_dual_plane_orthogonally() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let v = normalize_spacelike(&MinkVec::new(1.5, 0.3, -0.4, 0.8));
        for _ in 0..50 {
            // Random hyperbolic point q; the line through q and v, as a
            // geodesic, is span(q, v) ∩ H³. Its tangent at the crossing point
            // with v^⊥ must be parallel to v.
            let q = normalize_timelike(&MinkVec::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                1.0,
            ));
            let p = normalize_timelike(&(q - mdot(&q, &v) * v));
            assert!(mdot(&p, &v).abs() < 1e-12);
            // Tangent of the geodesic through p inside span(q, v): the
            // component of v orthogonal to p, which is v itself.
            let tangent = v + mdot(&v, &p) * p;
            assert!((tangent - v).norm() < 1e-12);
        }
    }

    #[test]
    fn cross_product_is_orthogonal() {
        let a = MinkVec::new(1.0, 0.2, 0.3, 2.0);
        let b = MinkVec::new(-0.3, 1.0, 0.1, 1.5);
        let c = MinkVec::new(0.2, -0.4, 1.0, 1.7);
        let m = mink_cross(&a, &b, &c);
        for v in [a, b, c] {
            assert!(mdot(&m, &v).abs() < 1e-12);
        }
    }
}

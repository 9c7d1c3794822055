//! Random feasible tetrahedra, for property tests and benchmarks.

use super::{slots_at_vertex, HyperidealTet, VertexKind};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::f64::consts::PI;

/// Draw vertex kinds uniformly, then rejection-sample interior angles that
/// satisfy the ideal link equalities and pass the full feasibility test.
pub fn random_tet<R: Rng>(rng: &mut R) -> ([f64; 6], [VertexKind; 4]) {
    loop {
        let kinds: [VertexKind; 4] = std::array::from_fn(|_| {
            if rng.gen_bool(0.5) {
                VertexKind::Ideal
            } else {
                VertexKind::Hyperideal
            }
        });
        if let Some(a) = random_angles_for(rng, &kinds, 40) {
            return (a, kinds);
        }
    }
}

/// Rejection-sample angles for the given kinds; `None` after `tries` misses.
pub fn random_angles_for<R: Rng>(rng: &mut R, kinds: &[VertexKind; 4], tries: usize) -> Option<[f64; 6]> {
    let ideal: Vec<usize> = (0..4).filter(|&v| kinds[v] == VertexKind::Ideal).collect();
    let mut a = DMatrix::zeros(ideal.len(), 6);
    let mut b = DVector::zeros(ideal.len());
    for (r, &v) in ideal.iter().enumerate() {
        for e in slots_at_vertex(v) {
            a[(r, e)] = 1.0;
        }
        b[r] = PI;
    }
    for _ in 0..tries {
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(0.15..1.6)).collect();
        let mut x = DVector::from_vec(x);
        if !ideal.is_empty() {
            // Project onto the affine set {a x = b}.
            let r = &b - &a * &x;
            let (corr, _) = crate::linalg::least_squares(&a, &r);
            x += corr;
        }
        let angles: [f64; 6] = std::array::from_fn(|i| x[i]);
        if angles.iter().any(|&t| !(0.08..PI - 0.08).contains(&t)) {
            continue;
        }
        let margin_ok = (0..4).all(|v| {
            kinds[v] == VertexKind::Ideal || slots_at_vertex(v).iter().map(|&e| angles[e]).sum::<f64>() < PI - 0.05
        });
        if !margin_ok {
            continue;
        }
        if HyperidealTet::from_angles(angles, *kinds).is_ok() {
            return Some(angles);
        }
    }
    None
}

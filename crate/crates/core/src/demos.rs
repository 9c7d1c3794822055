//! Bundled demo instances.

use crate::angle::Angle;
use crate::complex::{CellComplex, HalfEdge};
use crate::conditions::{AngleData, Geometry};
use crate::io::Instance;

pub const DEMO_NAMES: [&str; 5] = [
    "torus-ideal-right-angles",
    "torus-hyperideal-2pi3",
    "k4-sphere-euclidean",
    "square-disk-framed",
    "genus2-hyperbolic",
];

/// Materializes a bundled instance by name.
pub fn demo(name: &str) -> Option<Instance> {
    let (complex, data) = match name {
        "torus-ideal-right-angles" => {
            let cx = CellComplex::torus_grid(2, 2);
            let d = AngleData::uniform(&cx, Angle::pi_frac(1, 2), Angle::zero(), Geometry::Euclidean);
            (cx, d)
        }
        "torus-hyperideal-2pi3" => {
            let cx = CellComplex::torus_grid(2, 2);
            let d = AngleData::uniform(&cx, Angle::pi_frac(2, 3), Angle::zero(), Geometry::Euclidean);
            (cx, d)
        }
        "k4-sphere-euclidean" => {
            let cx = k4();
            let d = AngleData::uniform(&cx, Angle::pi_frac(1, 2), Angle::pi_frac(1, 1), Geometry::Euclidean);
            (cx, d)
        }
        "square-disk-framed" => {
            let cx = CellComplex::from_faces(4, &[vec![0, 1, 2, 3]]).expect("square disk");
            let mut d = AngleData::uniform(&cx, Angle::pi_frac(1, 2), Angle::zero(), Geometry::Euclidean);
            d.framed = true;
            for v in 0..cx.num_vertices() {
                d.boundary_angles.insert(v, Angle::pi_frac(1, 3));
            }
            for e in 0..cx.num_edges() {
                d.polygonal_angles.insert(e, Angle::pi_frac(1, 2));
            }
            (cx, d)
        }
        "genus2-hyperbolic" => {
            let cx = genus_two();
            let d = AngleData::uniform(&cx, Angle::pi_frac(2, 3), Angle::zero(), Geometry::Hyperbolic);
            (cx, d)
        }
        _ => return None,
    };
    Some(Instance { name: Some(name.to_string()), complex, data })
}

/// The tetrahedron graph on the sphere.
pub fn k4() -> CellComplex {
    CellComplex::from_faces(4, &[vec![0, 1, 2], vec![0, 3, 1], vec![1, 3, 2], vec![0, 2, 3]]).expect("K4")
}

/// A genus-two surface: the double cover of the 3 × 3 torus grid branched
/// over the centers of two faces meeting at a single vertex. Each branch face
/// lifts to one octagon, every other cell to two copies (V = 18, E = 36,
/// F = 16).
pub fn genus_two() -> CellComplex {
    let base = CellComplex::torus_grid(3, 3);
    let a = 0;
    let corner_a = base.face(a)[0];
    let u = base.origin(corner_a);
    // A face at `u` sharing no edge with `a`.
    let corner_b = *base
        .outgoing(u)
        .iter()
        .find(|&&h| {
            let f = base.face_of(h);
            f != a && base.face(f).iter().all(|&g| base.twin(g).map(|t| base.face_of(t)) != Some(a))
        })
        .expect("diagonal face");
    branched_double_cover(&base, &[corner_a, corner_b])
}

/// Two sheets glued crosswise along cuts running from the centers of the
/// faces of `corners` to the common origin of those half-edges: walking
/// around such a face switches sheets when passing the corner.
fn branched_double_cover(base: &CellComplex, corners: &[usize]) -> CellComplex {
    let n = base.num_half_edges();
    let lift = |h: usize, s: usize| h + n * s;
    let mut next = vec![0; 2 * n];
    let mut twin = vec![None; 2 * n];
    for s in 0..2 {
        for h in 0..n {
            let g = base.next(h);
            let swap = corners.contains(&g) as usize;
            next[lift(h, s)] = lift(g, s ^ swap);
            twin[lift(h, s)] = base.twin(h).map(|t| lift(t, s));
        }
    }
    // Vertices are the orbits of h ↦ next(twin(h)).
    let mut origin = vec![usize::MAX; 2 * n];
    let mut nv = 0;
    for h in 0..2 * n {
        if origin[h] != usize::MAX {
            continue;
        }
        let mut g = h;
        loop {
            origin[g] = nv;
            g = next[twin[g].expect("closed base")];
            if g == h {
                break;
            }
        }
        nv += 1;
    }
    let hes = (0..2 * n).map(|h| HalfEdge { origin: origin[h], next: next[h], twin: twin[h] }).collect();
    CellComplex::build(nv, hes, None).expect("branched cover is a valid complex")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_two_counts() {
        let cx = genus_two();
        assert_eq!((cx.num_vertices(), cx.num_edges(), cx.num_faces()), (18, 36, 16));
        assert_eq!(cx.euler_characteristic(), -2);
        assert!(!cx.has_boundary());
        let mut sides: Vec<usize> = cx.faces().iter().map(|f| f.len()).collect();
        sides.sort();
        assert_eq!(sides[14..], [8, 8]);
        assert!(sides[..14].iter().all(|&s| s == 4));
        for v in 0..cx.num_vertices() {
            assert_eq!(cx.degree(v), 4);
        }
    }

    #[test]
    fn every_demo_exists() {
        for name in DEMO_NAMES {
            let inst = demo(name).unwrap();
            assert_eq!(inst.data.theta.len(), inst.complex.num_edges(), "{name}");
            assert_eq!(inst.data.kappa.len(), inst.complex.num_faces(), "{name}");
        }
        assert!(demo("nope").is_none());
    }
}

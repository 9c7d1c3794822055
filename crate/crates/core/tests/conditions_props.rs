use hyperideal::angle::Angle;
use hyperideal::complex::CellComplex;
use hyperideal::conditions::{check_conditions, AngleData, CheckOptions, Geometry, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn k4() -> CellComplex {
    CellComplex::from_faces(4, &[vec![0, 1, 2], vec![0, 3, 1], vec![1, 3, 2], vec![0, 2, 3]]).unwrap()
}

fn cube() -> CellComplex {
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

fn square_disk() -> CellComplex {
    CellComplex::from_faces(4, &[vec![0, 1, 2, 3]]).unwrap()
}

fn annulus() -> CellComplex {
    CellComplex::from_faces(6, &[vec![0, 1, 4, 3], vec![1, 2, 5, 4], vec![2, 0, 3, 5]]).unwrap()
}

fn small_complexes() -> Vec<(&'static str, CellComplex)> {
    vec![("k4", k4()), ("torus2x2", CellComplex::torus_grid(2, 2)), ("cube", cube()), ("torus3x2", CellComplex::torus_grid(3, 2))]
}

fn theta_sample(rng: &mut ChaCha8Rng) -> Angle {
    Angle::pi_frac(rng.gen_range(1..12), 12)
}

/// Random closed data with exact angles. Euclidean instances satisfy the
/// curvature sum when possible so that the domain conditions are exercised.
fn random_closed(cx: &CellComplex, geometry: Geometry, nonneg: bool, rng: &mut ChaCha8Rng) -> AngleData {
    let theta = (0..cx.num_edges()).map(|_| theta_sample(rng)).collect();
    let lo = if nonneg { 0 } else { -6 };
    let mut kappa: Vec<Angle> = (0..cx.num_faces()).map(|_| Angle::pi_frac(rng.gen_range(lo..6), 6)).collect();
    if geometry == Geometry::Euclidean {
        let rest: Angle = kappa[1..].iter().copied().sum();
        kappa[0] = Angle::pi_frac(2 * cx.euler_characteristic(), 1) - rest;
    }
    AngleData { theta, kappa, geometry, ..Default::default() }
}

fn summary(v: &Verdict) -> Option<BTreeSet<usize>> {
    v.ideal_faces().cloned()
}

#[test]
fn pruned_and_brute_force_checkers_agree_on_small_complexes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut accepted = 0;
    let mut rejected = 0;
    for (name, cx) in small_complexes() {
        for trial in 0..12 {
            let geometry = if trial % 2 == 0 { Geometry::Euclidean } else { Geometry::Hyperbolic };
            let data = random_closed(&cx, geometry, false, &mut rng);
            let opts = CheckOptions { chord_budget: 1, ..Default::default() };
            let pruned = check_conditions(&cx, &data, &opts).unwrap();
            let brute = check_conditions(&cx, &data, &CheckOptions { brute_force: true, ..opts }).unwrap();
            assert_eq!(summary(&pruned), summary(&brute), "{name} trial {trial}: {pruned:?} vs {brute:?}");
            if pruned.is_accepted() {
                accepted += 1;
            } else {
                rejected += 1;
            }
        }
    }
    assert!(accepted > 0 && rejected > 0, "degenerate sample: {accepted} accepted, {rejected} rejected");
}

#[test]
fn nonnegative_curvature_only_needs_disks_with_one_chord() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, cx) in small_complexes() {
        for trial in 0..10 {
            let geometry = if trial % 2 == 0 { Geometry::Euclidean } else { Geometry::Hyperbolic };
            let data = random_closed(&cx, geometry, true, &mut rng);
            if data.kappa.iter().any(|k| k.value() < 0.0 || k.value() >= 2.0 * std::f64::consts::PI) {
                continue;
            }
            let full = check_conditions(&cx, &data, &CheckOptions::default()).unwrap();
            let restricted = check_conditions(&cx, &data, &CheckOptions { restricted: true, ..Default::default() }).unwrap();
            assert_eq!(summary(&full), summary(&restricted), "{name} trial {trial}");
        }
    }
}

#[test]
fn verdicts_are_invariant_under_relabelling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, cx) in small_complexes() {
        for trial in 0..6 {
            let data = random_closed(&cx, Geometry::Euclidean, false, &mut rng);
            let h = cx.num_half_edges();
            let mut half_perm: Vec<usize> = (0..h).collect();
            let mut vertex_perm: Vec<usize> = (0..cx.num_vertices()).collect();
            for i in (1..h).rev() {
                half_perm.swap(i, rng.gen_range(0..=i));
            }
            for i in (1..vertex_perm.len()).rev() {
                vertex_perm.swap(i, rng.gen_range(0..=i));
            }
            let other = cx.relabel(&vertex_perm, &half_perm).unwrap();
            let mut moved = data.clone();
            let mut face_map = vec![0; cx.num_faces()];
            for old in 0..h {
                let new = half_perm[old];
                moved.theta[other.edge_of(new)] = data.theta[cx.edge_of(old)];
                moved.kappa[other.face_of(new)] = data.kappa[cx.face_of(old)];
                face_map[cx.face_of(old)] = other.face_of(new);
            }
            let a = check_conditions(&cx, &data, &CheckOptions::default()).unwrap();
            let b = check_conditions(&other, &moved, &CheckOptions::default()).unwrap();
            let mapped = summary(&a).map(|s| s.into_iter().map(|f| face_map[f]).collect::<BTreeSet<_>>());
            assert_eq!(mapped, summary(&b), "{name} trial {trial}");
        }
    }
}

/// Framed data on a surface with boundary, with exact angles.
fn random_framed(cx: &CellComplex, geometry: Geometry, rng: &mut ChaCha8Rng) -> AngleData {
    // Moderate angles keep the doubled instances quick to check: the search
    // budget grows with the total negative curvature and shrinks with θ.
    let mut data = AngleData {
        theta: (0..cx.num_edges()).map(|_| Angle::pi_frac(rng.gen_range(2..12), 12)).collect(),
        kappa: (0..cx.num_faces()).map(|_| Angle::pi_frac(rng.gen_range(-1..6), 6)).collect(),
        geometry,
        framed: true,
        ..Default::default()
    };
    for v in 0..cx.num_vertices() {
        if cx.is_boundary_vertex(v) {
            // Doubled spokes carry twice this angle, which must stay below π.
            data.boundary_angles.insert(v, Angle::pi_frac(rng.gen_range(2..6), 12));
        }
    }
    for e in 0..cx.num_edges() {
        if cx.is_boundary_edge(e) {
            data.polygonal_angles.insert(e, Angle::pi_frac(rng.gen_range(2..12), 12));
        }
    }
    if geometry == Geometry::Euclidean {
        let outer: Angle = data.polygonal_angles.values().copied().sum();
        let rest: Angle = data.kappa[1..].iter().copied().sum();
        data.kappa[0] = Angle::pi_frac(2 * cx.euler_characteristic(), 1) - outer - rest;
    }
    data
}

#[test]
fn framed_conditions_match_the_doubled_closed_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut seen = [0usize; 2];
    for (name, cx) in [("square", square_disk()), ("annulus", annulus())] {
        let ext = cx.extended_graph().unwrap();
        for trial in 0..16 {
            let geometry = if trial % 2 == 0 { Geometry::Euclidean } else { Geometry::Hyperbolic };
            // A flat annulus must carry total curvature −Σθ(∂), which makes
            // the checker's search budget (and runtime) large on its double.
            if name == "annulus" && geometry == Geometry::Euclidean {
                continue;
            }
            let data = random_framed(&cx, geometry, &mut rng);
            if data.kappa.iter().any(|k| k.value() >= 2.0 * std::f64::consts::PI) {
                continue;
            }
            let framed = check_conditions(&cx, &data, &CheckOptions::default()).unwrap();
            let theta = data.extended_theta(&ext).unwrap();
            let doubled = ext.double(&theta, &data.kappa).unwrap();
            let ddata = AngleData { theta: doubled.theta.clone(), kappa: doubled.kappa.clone(), geometry, ..Default::default() };
            let closed = check_conditions(&doubled.complex, &ddata, &CheckOptions::default()).unwrap();
            // Dual circles at the corners of the boundary polygon are never
            // points in a framed pattern, so an ideal collar face on the double
            // has no framed counterpart.
            let closed_framed_ok = match closed.ideal_faces() {
                Some(v) => !doubled.collar_faces.iter().any(|f| v.contains(f)),
                None => false,
            };
            assert_eq!(framed.is_accepted(), closed_framed_ok, "{name} trial {trial}: {framed:?} vs {closed:?}");
            if let (Some(a), Some(b)) = (framed.ideal_faces(), closed.ideal_faces()) {
                for f in 0..cx.num_faces() {
                    assert_eq!(a.contains(&f), b.contains(&f), "{name} trial {trial} face {f}");
                    assert_eq!(b.contains(&f), b.contains(&doubled.mirror_face(f)));
                }
            }
            seen[framed.is_accepted() as usize] += 1;
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0, "degenerate sample {seen:?}");
}

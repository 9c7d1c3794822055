//! Property checks of the tetrahedron layer against independent oracles.

use hyperideal::hypgeom::quadrature::QuadratureOptions;
use hyperideal::hypgeom::sampling::random_tet;
use hyperideal::hypgeom::tet::tangent_basis;
use hyperideal::hypgeom::{HyperidealTet, VertexKind};
use rand::SeedableRng;

fn volume_at(angles: [f64; 6], kinds: [VertexKind; 4]) -> f64 {
    HyperidealTet::from_angles(angles, kinds).unwrap().truncated_volume()
}

#[test]
fn engines_agree_on_random_tets() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let opts = QuadratureOptions::default();
    for _ in 0..12 {
        let (angles, kinds) = random_tet(&mut rng);
        let t = HyperidealTet::from_angles(angles, kinds).unwrap();
        let a = t.truncated_volume();
        let b = t.truncated_volume_quadrature(&opts);
        assert!((a - b).abs() < 1e-7 * a, "{kinds:?} {angles:?}: {a} vs {b}");
    }
}

#[test]
fn schlafli_matches_finite_differences() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
    let h = 1e-5;
    for _ in 0..40 {
        let (angles, kinds) = random_tet(&mut rng);
        let t = HyperidealTet::from_angles(angles, kinds).unwrap();
        let grad = t.volume_gradient_interior();
        let z = tangent_basis(&kinds);
        for c in 0..z.ncols() {
            let d: Vec<f64> = (0..6).map(|i| z[(i, c)]).collect();
            let plus: [f64; 6] = std::array::from_fn(|i| angles[i] + h * d[i]);
            let minus: [f64; 6] = std::array::from_fn(|i| angles[i] - h * d[i]);
            let fd = (volume_at(plus, kinds) - volume_at(minus, kinds)) / (2.0 * h);
            let an: f64 = (0..6).map(|i| grad[i] * d[i]).sum();
            let scale = 1.0 + t.edge_lengths().iter().map(|l| l.abs()).fold(0.0, f64::max);
            assert!((fd - an).abs() < 1e-5 * scale, "{kinds:?}: fd {fd} vs {an}");
        }
    }
}

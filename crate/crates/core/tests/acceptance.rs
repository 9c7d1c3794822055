//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits with status 1 if any criterion fails.

use hyperideal::angle::Angle;
use hyperideal::complex::CellComplex;
use hyperideal::conditions::{check_conditions, AngleData, CheckOptions, Geometry, Rejection, Verdict};
use hyperideal::demos::{demo, DEMO_NAMES};
use hyperideal::hypgeom::quadrature::QuadratureOptions;
use hyperideal::hypgeom::sampling::random_tet;
use hyperideal::hypgeom::tet::tangent_basis;
use hyperideal::hypgeom::{HyperidealTet, VertexKind};
use hyperideal::io::Instance;
use hyperideal::pipeline::{self, closed_problem, prepare, solve, solve_closed, PipelineOptions, Solution};
use hyperideal::solver::{random_feasible_point, total_volume, AngleAssignment, ConstraintSystem, FanOptions};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Λ(x) = −∫₀ˣ log|2 sin t| dt for 0 < x ≤ π/2, computed by splitting off
/// the logarithmic singularity: log(2 sin t) = log(2t) + log(sin t / t),
/// with the first part integrated exactly and the smooth rest by composite
/// Simpson.
fn lobachevsky_oracle(x: f64) -> f64 {
    let exact = x * (2.0 * x).ln() - x;
    let n = 20_000;
    let h = x / n as f64;
    let g = |t: f64| if t == 0.0 { 0.0 } else { (t.sin() / t).ln() };
    let mut s = g(0.0) + g(x);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    -(exact + s * h / 3.0)
}

fn solve_demo(name: &str, opts: &PipelineOptions) -> Result<Solution, String> {
    let inst = demo(name).ok_or_else(|| format!("no demo {name}"))?;
    solve(&inst, opts).map_err(|e| format!("{name}: {} ({e})", e.name()))
}

// ---------------------------------------------------------------------------

fn schlafli() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut mixed = [0usize; 5];
    for _ in 0..100 {
        let (angles, kinds) = random_tet(&mut rng);
        mixed[kinds.iter().filter(|&&k| k == VertexKind::Ideal).count()] += 1;
        let t = HyperidealTet::from_angles(angles, kinds).unwrap();
        let lengths = t.edge_lengths();
        let vol = |a: [f64; 6]| HyperidealTet::from_angles(a, kinds).unwrap().truncated_volume();
        // Ideal vertices pin their link sums, so differentiate along the
        // tangent directions of the feasible set.
        let z = tangent_basis(&kinds);
        let norm = lengths.iter().map(|l| l * l / 4.0).sum::<f64>().sqrt();
        for c in 0..z.ncols() {
            let plus: [f64; 6] = std::array::from_fn(|i| angles[i] + h * z[(i, c)]);
            let minus: [f64; 6] = std::array::from_fn(|i| angles[i] - h * z[(i, c)]);
            let fd = (vol(plus) - vol(minus)) / (2.0 * h);
            let analytic: f64 = (0..6).map(|i| -lengths[i] / 2.0 * z[(i, c)]).sum();
            worst = worst.max((fd - analytic).abs() / norm);
        }
    }
    // Relative to the norm of the exact gradient (l/2), which stays well
    // defined when a single directional derivative vanishes.
    outcome(
        worst < 1e-5 && start.elapsed() < Duration::from_secs(60),
        format!("max relative error {worst:.2e} < 1e-5 over 100 tets (ideal-vertex counts {mixed:?})"),
    )
}

fn engines() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let opts = QuadratureOptions::default();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (angles, kinds) = random_tet(&mut rng);
        let t = HyperidealTet::from_angles(angles, kinds).unwrap();
        let a = t.truncated_volume();
        let b = t.truncated_volume_quadrature(&opts);
        worst = worst.max((a - b).abs() / a);
    }
    let regular = HyperidealTet::from_angles([PI / 3.0; 6], [VertexKind::Ideal; 4]).unwrap().truncated_volume();
    let oracle = 3.0 * lobachevsky_oracle(PI / 3.0);
    let reg_err = (regular - oracle).abs() / oracle;
    let close_to_published = (oracle - 1.0149416).abs() < 1e-7;
    outcome(
        worst < 1e-7 && reg_err < 1e-7 && close_to_published,
        format!("engines agree to {worst:.2e} (< 1e-7) on 50 tets; regular ideal {regular:.10} vs 3Λ(π/3) = {oracle:.10} (rel {reg_err:.1e})"),
    )
}

fn concavity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let names = ["torus-ideal-right-angles", "torus-hyperideal-2pi3", "k4-sphere-euclidean", "genus2-hyperbolic"];
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let inst = demo(name).unwrap();
        let closed = closed_problem(&inst).unwrap();
        let verdict = check_conditions(&closed.complex, &closed.data, &CheckOptions::default()).unwrap();
        let (tc, targets) = prepare(&closed, &verdict, FanOptions::default()).unwrap();
        let sys = ConstraintSystem::new(&tc, &targets).unwrap();
        for p in 0..5 {
            let x0 = random_feasible_point(&tc, &targets, 100 * i as u64 + p).unwrap().to_vector();
            for _ in 0..10 {
                let w = DVector::from_fn(sys.z.ncols(), |_, _| rng.gen_range(-1.0..1.0));
                let d = &sys.z * w;
                let d = &d / d.norm();
                // Stay well inside the polytope.
                let h = 1e-3 * sys.min_slack(&x0).0.min(1.0);
                let v = |x: DVector<f64>| total_volume(&tc, &AngleAssignment::from_vector(&x));
                match (v(&x0 + &d * h), v(x0.clone()), v(&x0 - &d * h)) {
                    (Ok(a), Ok(b), Ok(c)) => {
                        let second = (a - 2.0 * b + c) / (h * h);
                        worst = worst.max(second);
                        if !(second < 0.0) {
                            failures.push(format!("{name}: {second:e}"));
                        }
                    }
                    _ => failures.push(format!("{name}: infeasible probe")),
                }
                count += 1;
            }
        }
    }
    outcome(
        failures.is_empty() && count == 200,
        format!("{count} directions, largest second difference {worst:.3e} (< 0); failures {failures:?}"),
    )
}

fn symmetric_solves() -> Outcome {
    let opts = PipelineOptions::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for name in ["torus-ideal-right-angles", "torus-hyperideal-2pi3", "genus2-hyperbolic"] {
        let t = Instant::now();
        match solve_demo(name, &opts) {
            Ok(s) => {
                let gluing = s.report.residuals.length_spread.max(s.pattern.residuals.gluing);
                let v = &s.verification;
                let elapsed = t.elapsed();
                let ok = s.report.converged
                    && gluing < 1e-7
                    && v.cone_angle_error < 1e-6
                    && (name == "genus2-hyperbolic" || v.theta_error < 1e-6)
                    && elapsed < Duration::from_secs(120);
                pass &= ok;
                lines.push(format!(
                    "{name}: gluing {gluing:.1e}, θ err {:.1e}, cone err {:.1e}, {:.2}s",
                    v.theta_error,
                    v.cone_angle_error,
                    elapsed.as_secs_f64()
                ));
            }
            Err(e) => {
                pass = false;
                lines.push(e);
            }
        }
    }
    outcome(pass, lines.join("; "))
}

fn uniqueness() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for name in DEMO_NAMES {
        let base = match solve_demo(name, &PipelineOptions::default()) {
            Ok(s) => s,
            Err(e) => {
                pass = false;
                lines.push(e);
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        for seed in 1..=5u64 {
            let opts = PipelineOptions { seed: Some(seed), ..Default::default() };
            match solve_demo(name, &opts) {
                Ok(s) if s.report.converged => worst = worst.max(s.theta.max_abs_diff(&base.theta)),
                Ok(_) => worst = f64::INFINITY,
                Err(e) => {
                    worst = f64::INFINITY;
                    lines.push(e);
                }
            }
        }
        pass &= worst < 1e-6;
        lines.push(format!("{name} {worst:.1e}"));
    }
    outcome(pass, format!("max-norm spread over 5 random starts (< 1e-6): {}", lines.join(", ")))
}

fn necessity() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for name in DEMO_NAMES {
        match solve_demo(name, &PipelineOptions::default()) {
            Ok(s) => {
                let v = &s.verification;
                let ok = v.ideal_face_sum_error < 1e-8 && v.gauss_bonnet < 1e-8 && v.bouquet_ok;
                pass &= ok;
                lines.push(format!("{name} ideal-sum {:.1e} GB {:.1e}", v.ideal_face_sum_error, v.gauss_bonnet));
            }
            Err(e) => {
                pass = false;
                lines.push(e);
            }
        }
    }
    outcome(pass, format!("tolerance 1e-8: {}", lines.join(", ")))
}

fn validator_table() -> Outcome {
    let torus = CellComplex::torus_grid(2, 2);
    let check = |num, den| {
        let d = AngleData::uniform(&torus, Angle::pi_frac(num, den), Angle::zero(), Geometry::Euclidean);
        check_conditions(&torus, &d, &CheckOptions::default()).unwrap()
    };
    let right = check(1, 2);
    let obtuse = check(2, 3);
    let acute = check(1, 4);
    let all: std::collections::BTreeSet<usize> = (0..4).collect();
    let a = right.ideal_faces() == Some(&all);
    let b = obtuse.ideal_faces().map(|v| v.is_empty()) == Some(true);
    let c = matches!(&acute, Verdict::Rejected { reason: Rejection::DomainViolation { domain, .. }, .. } if domain.is_single_face());
    outcome(
        a && b && c,
        format!("π/2 accepted with V = all faces: {a}; 2π/3 accepted with V = ∅: {b}; π/4 rejected by a single face: {c}"),
    )
}

fn doubling() -> Outcome {
    let inst = demo("square-disk-framed").unwrap();
    let framed = pipeline::validate(&inst, &CheckOptions::default()).unwrap();
    let doubled = pipeline::doubled_instance(&inst).unwrap();
    let closed = pipeline::validate(&doubled, &CheckOptions::default()).unwrap();
    let equiv = framed.is_accepted() == closed.is_accepted();
    let opts = PipelineOptions { symmetry_tol: 1e-8, ..Default::default() };
    match solve(&inst, &opts) {
        Ok(s) => {
            let f = s.framed.as_ref().unwrap();
            let mut err: f64 = 0.0;
            for (v, a) in &f.boundary_angles {
                err = err.max((a - inst.data.boundary_angles[v].value()).abs());
            }
            for (e, a) in &f.polygonal_angles {
                err = err.max((a - inst.data.polygonal_angles[e].value()).abs());
            }
            let ok = equiv && framed.is_accepted() && f.symmetry_residual < 1e-8 && err < 1e-6;
            outcome(
                ok,
                format!(
                    "framed accepted {} ⇔ doubled accepted {}; symmetry residual {:.1e} (< 1e-8); angle error {err:.1e} (< 1e-6)",
                    framed.is_accepted(),
                    closed.is_accepted(),
                    f.symmetry_residual
                ),
            )
        }
        Err(e) => outcome(false, format!("solve failed: {} ({e})", e.name())),
    }
}

fn collinearity() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for name in DEMO_NAMES {
        match solve_demo(name, &PipelineOptions::default()) {
            Ok(s) => {
                pass &= s.verification.collinearity < 1e-6;
                lines.push(format!("{name} {:.1e}", s.verification.collinearity));
            }
            Err(e) => {
                pass = false;
                lines.push(e);
            }
        }
    }
    outcome(pass, format!("largest distance to the line of centers (< 1e-6): {}", lines.join(", ")))
}

fn triangulation_independence() -> Outcome {
    let inst: Instance = demo("torus-hyperideal-2pi3").unwrap();
    let radii = |rotation: usize| -> Result<(Vec<f64>, Vec<f64>), String> {
        let closed = closed_problem(&inst).map_err(|e| e.to_string())?;
        let verdict = check_conditions(&closed.complex, &closed.data, &CheckOptions::default()).map_err(|e| e.to_string())?;
        let opts = PipelineOptions { fan: FanOptions { rotation }, ..Default::default() };
        let s = solve_closed(closed, verdict, &opts).map_err(|e| e.to_string())?;
        let mut dual: Vec<f64> = s.pattern.dual_circles.iter().map(|d| d.radius).collect();
        let mut principal: Vec<f64> = s.pattern.principal_circles.iter().map(|c| c.radius).collect();
        dual.sort_by(f64::total_cmp);
        principal.sort_by(f64::total_cmp);
        Ok((dual, principal))
    };
    let base = match radii(0) {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let mut worst: f64 = 0.0;
    for rotation in 1..4 {
        match radii(rotation) {
            Ok((d, p)) => {
                for (a, b) in d.iter().zip(&base.0).chain(p.iter().zip(&base.1)) {
                    worst = worst.max((a - b).abs());
                }
            }
            Err(e) => return outcome(false, e),
        }
    }
    outcome(worst < 1e-6, format!("sorted radii differ by at most {worst:.1e} (< 1e-6) over fan rotations 1..3"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Schläfli identity", schlafli),
        ("volume engines", engines),
        ("concavity", concavity),
        ("symmetric solves", symmetric_solves),
        ("uniqueness", uniqueness),
        ("necessity checks", necessity),
        ("validator table", validator_table),
        ("doubling equivalence", doubling),
        ("collinearity", collinearity),
        ("triangulation independence", triangulation_independence),
    ];
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:2} {name} [{:.1}s]: {}", i + 1, t.elapsed().as_secs_f64(), o.detail);
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

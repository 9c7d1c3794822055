use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperideal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("HYPERIDEAL_WORKERS").output().expect("run hyperideal")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn demo(dir: &TempDir, name: &str) -> PathBuf {
    let path = dir.path().join(format!("{name}.json"));
    let o = run(&["demo", name, "--out", p(&path)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn right_angled_torus_solves_exactly() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "torus-ideal-right-angles");
    let out = dir.path().join("solution.json");
    let o = run(&["solve", p(&inst), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sol = read_json(&out);
    let v = &sol["verification"];
    for key in ["theta_error", "cone_angle_error", "ideal_face_sum_error", "collinearity", "orthogonality", "gauss_bonnet"] {
        assert!(v[key].as_f64().unwrap() < 1e-9, "{key} = {}", v[key]);
    }
    assert!(sol["solver"]["residuals"]["length_spread"].as_f64().unwrap() < 1e-9);
    assert_eq!(sol["dual_circles"].as_array().unwrap().len(), 4);
    assert!(sol["dual_circles"].as_array().unwrap().iter().all(|d| d["radius"].as_f64() == Some(0.0)));
    assert_eq!(sol["ideal_faces"].as_array().unwrap().len(), 4);
}

#[test]
fn quarter_pi_torus_is_rejected_with_a_face_witness() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "torus-ideal-right-angles");
    let angles = dir.path().join("angles.json");
    std::fs::write(&angles, r#"{"theta": {"0": "pi*1/4", "1": "pi/4", "2": "pi/4", "3": "pi/4", "4": "pi/4", "5": "pi/4", "6": "pi/4", "7": "pi/4"}, "kappa": 0, "geometry": "euclidean"}"#).unwrap();
    let out = dir.path().join("verdict.json");
    let o = run(&["validate", p(&inst), "--angles", p(&angles), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    let v = read_json(&out);
    assert_eq!(v["accepted"], false);
    assert_eq!(v["rejection"], "DomainViolation");
    assert_eq!(v["witness"]["faces"].as_array().unwrap().len(), 1);
    assert_eq!(v["witness"]["edges"].as_array().unwrap().len(), 4);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "DomainViolation");

    // solve refuses the same data with the same status.
    let o = run(&["solve", p(&inst), "--angles", p(&angles)]);
    assert_eq!(code(&o), 2);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["witness"]["faces"].as_array().unwrap().len(), 1);
}

#[test]
fn doubled_square_disk_is_accepted() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "square-disk-framed");
    let framed = run(&["validate", p(&inst)]);
    assert_eq!(code(&framed), 0);
    let doubled = dir.path().join("doubled.json");
    assert_eq!(code(&run(&["double", p(&inst), "--out", p(&doubled)])), 0);
    let d = read_json(&doubled);
    assert_eq!(d["vertices"].as_array().unwrap().len(), 8);
    let o = run(&["validate", p(&doubled)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["accepted"], true);
    assert_eq!(v["euler_characteristic"], 2);

    // Doubling a closed surface is an input error.
    let torus = demo(&dir, "torus-ideal-right-angles");
    let o = run(&["double", p(&torus)]);
    assert_eq!(code(&o), 1);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "NoBoundary");
}

#[test]
fn framed_solution_carries_the_restriction() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "square-disk-framed");
    let out = dir.path().join("solution.json");
    let o = run(&["solve", p(&inst), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sol = read_json(&out);
    let framed = &sol["framed"];
    assert_eq!(framed["boundary_segments"], 4);
    for (_, a) in framed["boundary_angles"].as_object().unwrap() {
        assert!((a.as_f64().unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-6);
    }
    for (_, a) in framed["polygonal_angles"].as_object().unwrap() {
        assert!((a.as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "torus-hyperideal-2pi3");
    let a = run(&["solve", p(&inst), "--seed", "7"]);
    let b = run(&["solve", p(&inst), "--seed", "7", "--workers", "1"]);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("e0") || text.contains("e-1"), "floats use the 17-digit format");
}

#[test]
fn render_writes_svg() {
    let dir = TempDir::new().unwrap();
    for (name, marker) in [("torus-ideal-right-angles", "<circle"), ("genus2-hyperbolic", r#"<polygon class="principal" points="#)] {
        let inst = demo(&dir, name);
        let sol = dir.path().join(format!("{name}.solution.json"));
        let o = run(&["solve", p(&inst), "--out", p(&sol)]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let o = run(&["render", p(&sol)]);
        assert_eq!(code(&o), 0);
        let svg = String::from_utf8(o.stdout).unwrap();
        assert!(svg.starts_with("<svg"), "{name}");
        assert!(svg.contains(r#"viewBox="0 0 1024 1024""#), "{name}");
        assert!(svg.contains(marker), "{name}");
    }
}

#[test]
fn tetrahedra_can_be_dumped() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "k4-sphere-euclidean");
    let tets = dir.path().join("tets.json");
    let o = run(&["solve", p(&inst), "--dump-tets", p(&tets)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dump = read_json(&tets);
    let dump = dump.as_array().unwrap();
    assert_eq!(dump.len(), 4);
    for t in dump {
        for key in ["normals", "vertices", "interior_angles", "lengths", "volume"] {
            assert!(!t[key].is_null(), "{key}");
        }
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "torus-ideal-right-angles");
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"vertices\": [0], \"half_edges\": [{\"origin\": 0, \"next\": 0, \"twin\": 0}]}").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["bogus"],
        vec!["demo", "no-such-demo"],
        vec!["solve", p(&inst), "--tol-grad", "-1"],
        vec!["solve", p(&inst), "--geometry", "spherical"],
        vec!["solve", p(&inst), "--out", p(&inst)],
        vec!["validate", "/nonexistent/instance.json"],
        vec!["validate", p(&garbage)],
        vec!["render", p(&inst)],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["validate", p(&garbage)]);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "InvalidComplex");
    assert!(err["message"].as_str().unwrap().contains("half-edge 0"));
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn solver_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "genus2-hyperbolic");
    let o = run(&["solve", p(&inst), "--max-iter", "1"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "MaxIterations");
    assert!(err["witness"]["residuals"].is_object());
}

#[test]
fn geometry_override_changes_the_verdict() {
    let dir = TempDir::new().unwrap();
    let inst = demo(&dir, "torus-hyperideal-2pi3");
    // κ ≡ 0 on a torus has Σκ = 2πχ, which the hyperbolic conditions exclude.
    let o = run(&["validate", p(&inst), "--geometry", "hyperbolic"]);
    assert_eq!(code(&o), 2);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rejection"], "GaussBonnetMismatch");
}

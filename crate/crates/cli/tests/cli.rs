use std::fs;
use std::path::{Path, PathBuf};

use qcomp::linalg::paulis;
use qcomp::maps::cq_map;
use qcomp::HermitianMap;
use qcomp_cli::{run, EXIT_OK, EXIT_VALIDATION};
use serde_json::Value;
use tempfile::TempDir;

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, v: &T) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn call(args: &[&str]) -> i32 {
    run(std::iter::once("qcomp").chain(args.iter().copied()))
}

fn report(dir: &Path, args: &[&str]) -> Value {
    let out = dir.join("report.json");
    let mut full = args.to_vec();
    full.extend(["--output", out.to_str().unwrap()]);
    assert_eq!(call(&full), EXIT_OK, "{args:?}");
    serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generation_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    for (out, seed) in [(&a, "1"), (&b, "1"), (&c, "2")] {
        assert_eq!(
            call(&["gen", "channel", "--d-in", "2", "--d-out", "2", "--seed", seed, "--output", path(out)]),
            EXIT_OK
        );
    }
    let (ta, tb, tc) = (fs::read(&a).unwrap(), fs::read(&b).unwrap(), fs::read(&c).unwrap());
    assert_eq!(ta, tb);
    assert_ne!(ta, tc);
    let phi: HermitianMap = serde_json::from_slice(&ta).unwrap();
    assert!(phi.is_channel(1e-10));
}

#[test]
fn generated_ensemble_is_normalized() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e.json");
    assert_eq!(call(&["gen", "ensemble", "--dim", "2", "--n", "4", "--trials", "3", "--output", path(&out)]), EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let e: qcomp::discrimination::Ensemble = serde_json::from_str(line).unwrap();
        assert_eq!(e.len(), 4);
        assert!((e.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn identity_has_zero_self_deficiency() {
    let dir = TempDir::new().unwrap();
    let id2 = write_json(dir.path(), "id2.json", &HermitianMap::identity(2));
    let r = report(dir.path(), &["deficiency", "--phi", path(&id2), "--psi", path(&id2)]);
    assert_eq!(r["command"], "deficiency");
    assert!(r["values"]["value"].as_f64().unwrap().abs() < 1e-7);
    assert!(r["certificates"]["deficiency"]["gap"].as_f64().unwrap() < 1e-7);
    assert!(r["residuals"]["deficiency"].is_object());
    assert!(r["wall_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn diamond_norm_of_pauli_cq_map() {
    let dir = TempDir::new().unwrap();
    let map = write_json(dir.path(), "cq_paulis.json", &cq_map(&[paulis::z(), paulis::x()]).unwrap());
    let r = report(dir.path(), &["diamond", "--map", path(&map)]);
    assert!((r["values"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-7);
}

#[test]
fn experiment_against_itself() {
    let dir = TempDir::new().unwrap();
    let s = dir.path().join("s.json");
    assert_eq!(call(&["gen", "experiment", "--dim", "2", "--n", "3", "--seed", "5", "--output", path(&s)]), EXIT_OK);
    let r = report(dir.path(), &["exp-deficiency", "--s", path(&s), "--t", path(&s)]);
    assert!(r["values"]["value"].as_f64().unwrap().abs() < 1e-7);
}

#[test]
fn thm1_suite_reports_no_violations() {
    let dir = TempDir::new().unwrap();
    let id2 = write_json(dir.path(), "id2.json", &HermitianMap::identity(2));
    let dep = write_json(dir.path(), "dep05.json", &HermitianMap::depolarizing(2, 0.5));
    let r = report(
        dir.path(),
        &["verify", "--suite", "thm1", "--phi", path(&id2), "--psi", path(&dep), "--trials", "10", "--seed", "7"],
    );
    assert_eq!(r["values"]["report"]["violations"], 0);
}

#[test]
fn bad_inputs_exit_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(call(&["diamond", "--map", path(&missing)]), EXIT_VALIDATION);
    let junk = dir.path().join("junk.json");
    fs::write(&junk, "{\"d_in\": 2}").unwrap();
    assert_eq!(call(&["dual", "--map", path(&junk)]), EXIT_VALIDATION);
    let id2 = write_json(dir.path(), "id2.json", &HermitianMap::identity(2));
    let id3 = write_json(dir.path(), "id3.json", &HermitianMap::identity(3));
    assert_eq!(call(&["deficiency", "--phi", path(&id2), "--psi", path(&id3)]), EXIT_VALIDATION);
    assert_eq!(call(&["no-such-command"]), EXIT_VALIDATION);
    assert_eq!(call(&["gen", "channel", "--d-in", "0"]), EXIT_VALIDATION);
}

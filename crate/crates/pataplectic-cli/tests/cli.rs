use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pataplectic"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn kg_files(dir: &Path, nx: usize) {
    fs::write(
        dir.join("kg.json"),
        r#"{"preset": "klein_gordon", "mass": 1.0}"#,
    )
    .unwrap();
    let dx = 2.0 * std::f64::consts::PI / nx as f64;
    let lat = serde_json::json!({"axes": [{"nodes": nx / 2 + 1, "spacing": dx / 2.0}, {"nodes": nx, "spacing": dx}]});
    fs::write(dir.join("lat.json"), lat.to_string()).unwrap();
    fs::write(dir.join("init.json"), r#"{"y": ["cos(x2 - sqrt(2)*x1)"]}"#).unwrap();
}

#[test]
fn help_and_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["--help"], d.path())), 0);
    assert_eq!(code(&cli(&["verify", "--help"], d.path())), 0);
    assert_eq!(code(&cli(&["frobnicate"], d.path())), 1);
    assert_eq!(
        code(&cli(
            &["model", "show", "--model", "missing.json"],
            d.path()
        )),
        1
    );
}

#[test]
fn malformed_model_names_the_field() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("bad.json"),
        r#"{"preset": "klein_gordon", "mass": "heavy"}"#,
    )
    .unwrap();
    let o = cli(&["model", "show", "--model", "bad.json"], d.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("mass"), "{}", stderr(&o));
    fs::write(
        d.path().join("typo.json"),
        r#"{"preset": "klein_gordon", "masss": 1.0}"#,
    )
    .unwrap();
    let o = cli(&["model", "show", "--model", "typo.json"], d.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("masss"), "{}", stderr(&o));
    fs::write(
        d.path().join("expr.json"),
        r#"{"chart": {"n": 1, "k": 1}, "lagrangian": "v1_1^2 +* y1"}"#,
    )
    .unwrap();
    let o = cli(&["model", "show", "--model", "expr.json"], d.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("lagrangian"), "{}", stderr(&o));
}

#[test]
fn model_show_prints_the_hamiltonian() {
    let d = tempfile::tempdir().unwrap();
    kg_files(d.path(), 16);
    let o = cli(&["model", "show", "--model", "kg.json"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["format_version"], "1.0");
    assert_eq!(
        v["hamiltonian"],
        "-1/2*p2_1^2 + 1/2*p1_1^2 + eps + 1/2*y1^2"
    );
}

#[test]
fn identity_suite_passes_and_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("weyl-2-1.json"), r#"{"n": 2, "k": 1}"#).unwrap();
    let args = [
        "verify-identities",
        "--chart",
        "weyl-2-1.json",
        "--seed",
        "7",
    ];
    let a = cli(&args, d.path());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = cli(&args, d.path());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    for name in [
        "lie_isomorphism",
        "bracket_table",
        "admissibility",
        "x_dependence_detected",
    ] {
        assert!(
            checks
                .iter()
                .any(|c| c["check"] == name && c["passed"] == true),
            "{name}"
        );
    }
}

#[test]
fn simulate_then_verify_theorem2() {
    let d = tempfile::tempdir().unwrap();
    kg_files(d.path(), 32);
    let o = cli(
        &[
            "simulate",
            "--model",
            "kg.json",
            "--lattice",
            "lat.json",
            "--init",
            "init.json",
            "--out",
            "t.csv",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let args = [
        "verify",
        "--traj",
        "t.csv",
        "--check",
        "theorem2,lemma4",
        "--report",
        "r.json",
    ];
    let o = cli(&args, d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = fs::read(d.path().join("r.json")).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    let order = checks.iter().find(|c| c["name"] == "theorem2").unwrap()["estimated_order"]
        .as_f64()
        .unwrap();
    assert!((order - 2.0).abs() < 0.3, "order {order}");
    cli(&args, d.path());
    assert_eq!(first, fs::read(d.path().join("r.json")).unwrap());
}

#[test]
fn broken_symmetry_fails_with_exit_2() {
    let d = tempfile::tempdir().unwrap();
    kg_files(d.path(), 16);
    cli(
        &[
            "simulate",
            "--model",
            "kg.json",
            "--lattice",
            "lat.json",
            "--init",
            "init.json",
            "--out",
            "t.csv",
        ],
        d.path(),
    );
    let o = cli(
        &[
            "verify", "--traj", "t.csv", "--check", "noether", "--levels", "1", "--xi", "0",
            "--xi", "0", "--xi", "1",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks"][0]["notes"]["symmetric"], false);
}

#[test]
fn unknown_trajectory_version_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    kg_files(d.path(), 16);
    cli(
        &[
            "simulate",
            "--model",
            "kg.json",
            "--lattice",
            "lat.json",
            "--init",
            "init.json",
            "--out",
            "t.csv",
        ],
        d.path(),
    );
    let text = fs::read_to_string(d.path().join("t.csv"))
        .unwrap()
        .replacen("\"1.0\"", "\"2.0\"", 1);
    fs::write(d.path().join("t2.csv"), text).unwrap();
    let o = cli(
        &["verify", "--traj", "t2.csv", "--check", "stress"],
        d.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("format_version"), "{}", stderr(&o));
}

#[test]
fn legendre_and_bracket() {
    let d = tempfile::tempdir().unwrap();
    kg_files(d.path(), 16);
    let o = cli(
        &[
            "legendre",
            "--model",
            "kg.json",
            "--samples",
            "20",
            "--seed",
            "3",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["max_roundtrip_error"].as_f64().unwrap() <= 1e-10);
    let o = cli(
        &[
            "bracket",
            "--model",
            "kg.json",
            "--a",
            r#"{"kind": "momentum", "coordinate": "y1", "g": "1"}"#,
            "--b",
            r#"{"kind": "position", "field": 0, "f": ["x2", "0"]}"#,
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    // {P_(y,1), Q^(y,f)} = f^1 omega_1 = x2 dx2
    assert_eq!(v["degree"], 1);
    assert_eq!(v["bracket"], "(x2) dx2");
    assert_eq!(v["b"]["admissibility"]["admissible"], true);
    let o = cli(
        &[
            "bracket",
            "--model",
            "kg.json",
            "--a",
            r#"{"kind": "hamiltonian_density"}"#,
            "--b",
            r#"{"kind": "momentum", "coordinate": "x1", "g": "x2"}"#,
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degree"], 2);
    assert_eq!(v["a"]["admissibility"], Value::Null);
    assert_eq!(v["b"]["admissibility"]["admissible"], false);
}

#[test]
fn thread_variable_is_validated() {
    let d = tempfile::tempdir().unwrap();
    kg_files(d.path(), 16);
    let o = Command::new(env!("CARGO_BIN_EXE_pataplectic"))
        .args(["model", "show", "--model", "kg.json"])
        .current_dir(d.path())
        .env("PATAPLECTIC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("PATAPLECTIC_THREADS"));
}

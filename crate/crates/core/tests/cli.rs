use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn curvquot(config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_curvquot"))
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&o.stdout).to_string() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().unwrap(), text)
}

fn write(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_unit_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "solve", "n": 2, "k": 2, "l": 1, "p": 4.0, "f": {"constant": 1.0}, "grid": {"kind": "axisymmetric", "nodes": 64}}"#,
    );
    let out = dir.path().join("out");
    let (code, text) = curvquot(&cfg, &out, &[]);
    assert_eq!(code, 0, "{text}");
    let r = report(&out);
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(r["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == Value::Bool(true)));
    for f in ["solution.csv", "trace.csv", "profile.csv", "diagnostics.json", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let d: Value = serde_json::from_str(&fs::read_to_string(out.join("diagnostics.json")).unwrap()).unwrap();
    for key in ["min_eigen_A", "condition14_margin", "minkowski_gap_m", "noncollapse_ratio"] {
        assert!(d.get(key).is_some(), "{key}");
    }
}

#[test]
fn full_grid_writes_obj() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "solve", "n": 2, "k": 1, "l": 0, "p": 3.0, "f": {"expr": [[0.2, [0, 1, 1]]]}, "grid": {"kind": "full2d", "n_theta": 16, "n_phi": 32}}"#,
    );
    let out = dir.path().join("out");
    let (code, text) = curvquot(&cfg, &out, &[]);
    assert_eq!(code, 0, "{text}");
    let obj = fs::read_to_string(out.join("surface.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 16 * 32 + 2);
}

#[test]
fn eigen_constant_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "eigen", "n": 3, "k": 2, "l": 1, "f": {"constant": 3.0}, "grid": {"kind": "axisymmetric", "nodes": 64}}"#,
    );
    let out = dir.path().join("out");
    let (code, text) = curvquot(&cfg, &out, &[]);
    assert_eq!(code, 0, "{text}");
    let e: Value = serde_json::from_str(&fs::read_to_string(out.join("eigen.json")).unwrap()).unwrap();
    assert!((e["tau"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert_eq!(e["tau_sequence"].as_array().unwrap().len(), 9);
}

#[test]
fn verify_rejects_dilated_solution() {
    let dir = tempfile::tempdir().unwrap();
    let solve = r#"{"mode": "solve", "n": 2, "k": 2, "l": 1, "p": 4.0, "f": {"expr": [[0.3, [2]]]}, "grid": {"kind": "axisymmetric", "nodes": 128}}"#;
    let cfg = write(dir.path(), "solve.json", solve);
    let out = dir.path().join("solve");
    assert_eq!(curvquot(&cfg, &out, &[]).0, 0);

    let rows = csv_rows(&out.join("solution.csv"));
    fs::copy(out.join("solution.csv"), dir.path().join("exact.csv")).unwrap();
    let mut text = rows[0].join(",") + "\n";
    for r in &rows[1..] {
        let v: f64 = r[1].parse().unwrap();
        text += &format!("{},{}\n", r[0], 1.5 * v);
    }
    fs::write(dir.path().join("dilated.csv"), text).unwrap();

    let verify = |file: &str| {
        format!(
            r#"{{"mode": "verify", "n": 2, "k": 2, "l": 1, "p": 4.0, "f": {{"expr": [[0.3, [2]]]}}, "grid": {{"kind": "axisymmetric", "nodes": 128}}, "solution": "{file}"}}"#
        )
    };
    let good = write(dir.path(), "good.json", &verify("exact.csv"));
    assert_eq!(curvquot(&good, &dir.path().join("v1"), &[]).0, 0);
    let bad = write(dir.path(), "bad.json", &verify("dilated.csv"));
    let (code, text) = curvquot(&bad, &dir.path().join("v2"), &[]);
    assert_eq!(code, 4, "{text}");
}

#[test]
fn exponent_sweep_matches_constant_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"mode": "sweep", "n": 2, "k": 2, "l": 1, "p": 3.0, "f": {"constant": 2.0},
            "grid": {"kind": "axisymmetric", "nodes": 64}, "sweep": {"mode": "solve", "p": [2.2, 2.6, 3.0]}}"#,
    );
    let out = dir.path().join("out");
    let (code, text) = curvquot(&cfg, &out, &[]);
    assert_eq!(code, 0, "{text}");
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows[0].join(","), "row,mode,p,resolution,status,residual,u_min,u_max,tau,min_eigen_A,minkowski_gap_max,surface_residual,tau_sequence,error");
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        let p: f64 = r[2].parse().unwrap();
        let expect = 2f64.powf(1.0 / (p - 2.0));
        for col in [6, 7] {
            let v: f64 = r[col].parse().unwrap();
            assert!((v - expect).abs() < 1e-9 * expect, "p={p}: {v} vs {expect}");
        }
    }
}

#[test]
fn resolution_sweep_shows_second_order_minkowski_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"mode": "sweep", "n": 3, "k": 2, "l": 1, "p": 3.5, "f": {"expr": [[0.3, [2]]]},
            "sweep": {"mode": "solve", "resolution": [64, 128, 256]}, "uniqueness_trials": 0}"#,
    );
    let out = dir.path().join("out");
    let (code, text) = curvquot(&cfg, &out, &[]);
    assert_eq!(code, 0, "{text}");
    let gaps: Vec<f64> = csv_rows(&out.join("sweep.csv"))[1..].iter().map(|r| r[10].parse().unwrap()).collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..4.8).contains(&ratio), "gaps {gaps:?}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        r#"{"mode": "solve", "n": 2, "k": 2, "l": 1, "p": 4.0, "f": {"constant": 1.0}, "colour": 1}"#,
        r#"{"mode": "solve", "n": 2, "k": 2, "l": 1, "p": 2.0, "f": {"constant": 1.0}}"#,
        r#"{"mode": "eigen", "n": 2, "k": 3, "l": 1, "f": {"constant": 1.0}}"#,
        r#"{"mode": "solve", "n": 3, "k": 2, "l": 1, "p": 4.0, "f": {"constant": 1.0}, "grid": {"kind": "full2d", "n_theta": 8, "n_phi": 16}}"#,
        r#"{"mode": "verify", "n": 2, "k": 2, "l": 1, "p": 4.0, "f": {"constant": 1.0}}"#,
        r#"not json"#,
    ];
    for (i, c) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.json"), c);
        let (code, text) = curvquot(&cfg, &out, &[]);
        assert_eq!(code, 2, "case {i}: {text}");
    }
    let (code, _) = curvquot(&dir.path().join("missing.json"), &out, &[]);
    assert_eq!(code, 2);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "solve", "n": 2, "k": 2, "l": 1, "p": 4.0, "f": {"expr": [[0.3, [2]], [0.1, [1]]]}, "grid": {"kind": "axisymmetric", "nodes": 96}}"#,
    );
    let strip = |out: &Path| {
        let mut r = report(out);
        r.as_object_mut().unwrap().remove("timestamp");
        (r, fs::read_to_string(out.join("solution.csv")).unwrap())
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(curvquot(&cfg, &a, &["--seed", "5"]).0, 0);
    assert_eq!(curvquot(&cfg, &b, &["--seed", "5"]).0, 0);
    assert_eq!(strip(&a), strip(&b));
    let c = dir.path().join("c");
    assert_eq!(curvquot(&cfg, &c, &["--resolution", "48"]).0, 0);
    assert_eq!(csv_rows(&c.join("solution.csv")).len(), 49);
}

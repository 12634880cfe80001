use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neutral-dichotomy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    });
    (out.status.code().unwrap(), v)
}

#[test]
fn spectrum_of_pure_neutral_equation() {
    let (code, v) = json(&["--a", "0", "--b", "0", "--c", "2", "--n-max", "5", "spectrum"]);
    assert_eq!(code, 0);
    let roots = v["roots"].as_array().unwrap();
    // Indices -5..=5 plus the unindexed root λ = 0.
    assert_eq!(roots.len(), 12);
    for r in roots.iter().filter(|r| !r["n"].is_null()) {
        assert!((r["re"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(r["scaled_deviation"].as_f64().unwrap() < 1e-12);
    }
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["c"], 2.0);
}

#[test]
fn spectrum_all_certified() {
    let (code, v) = json(&["--a", "1", "--b", "2", "--c", "0.5", "--n-max", "50", "spectrum"]);
    assert_eq!(code, 0);
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 102);
    assert!(roots.iter().all(|r| r["certified"] == true));
}

#[test]
fn invalid_parameters_exit_one() {
    let out = run(&["--c", "0", "spectrum"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c must be nonzero"));
    assert_eq!(run(&["--grid", "7", "gaps"]).status.code(), Some(1));
    assert_eq!(run(&["--bogus", "gaps"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn gaps_report_both_configurations() {
    let (code, v) = json(&["--a", "2", "--b", "0.5", "--c", "1", "--m-max", "6", "gaps"]);
    assert_eq!(code, 0);
    assert_eq!(v["note"], "countably many dichotomies");
    let counts: Vec<u64> = v["gaps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["count"].as_u64().unwrap())
        .collect();
    assert_eq!(counts, vec![0, 1, 3, 5, 7, 9]);

    let out = run(&["--a", "1", "--b", "1", "--c", "1", "--m-max", "6", "gaps"]);
    assert_eq!(out.status.code(), Some(2));
    let (code, v) = json(&["--a", "1", "--b", "1", "--c", "1", "gaps"]);
    assert_eq!(code, 0);
    assert_eq!(v["note"], "finitely many dichotomies");
}

#[test]
fn csv_output_carries_config() {
    let out = run(&["--format", "csv", "--n-max", "3", "spectrum"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# neutral-dichotomy "));
    assert!(text.contains("# config n_max=3\n"));
    assert!(text.contains("# table=roots\nn,re,im,"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"a": 0, "b": 0, "c": 2, "n_max": 2}"#).unwrap();
    let (_, v) = json(&["--config", cfg.to_str().unwrap(), "--c", "-2", "spectrum"]);
    assert_eq!(v["config"]["c"], -2.0);
    assert_eq!(v["config"]["n_max"], 2);
}

fn write_phi(path: &Path) {
    let n = 512;
    let mut s = String::from("theta,re,im\n");
    for j in 0..=n {
        let t = -1.0 + j as f64 / n as f64;
        s.push_str(&format!("{t},{},0\n", (3.0 * t).cos() + t));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn project_writes_parts() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.csv");
    write_phi(&phi);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--a",
        "2",
        "--b",
        "0.5",
        "--c",
        "1",
        "--gap",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
        "project",
        "--phi",
        phi.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rank"], 3);
    assert!(report["idempotence_residual"].as_f64().unwrap() < 1e-9);
    for part in ["finite.csv", "complement.csv"] {
        let f = std::fs::File::open(out_dir.join(part)).unwrap();
        let g = neutral_dichotomy::GridFunction::read_csv(f).unwrap();
        assert_eq!(g.n_intervals(), 512);
        assert_eq!(g.max_imag(), 0.0);
    }
}

#[test]
fn project_rejects_missing_file() {
    assert_eq!(
        run(&["project", "--phi", "/nonexistent/phi.csv"]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_meets_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--a",
        "2",
        "--b",
        "0.5",
        "--c",
        "1",
        "--gap",
        "1",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
        "simulate",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["passed"], true);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.contains("t,x_re,x_im,dx_re,dx_im"));
}

#[test]
fn norms_table_and_fits() {
    let (code, v) = json(&["--a", "1", "--b", "2", "--c", "0.5", "--grid", "256", "norms"]);
    assert_eq!(code, 0);
    let slope = v["perturbation_loglog_fit"]["slope"].as_f64().unwrap();
    assert!((slope + 1.0).abs() < 0.1, "{slope}");
    assert_eq!(v["perturbation"].as_array().unwrap().len(), 19);

    let out = run(&["--a", "1", "--b", "1", "--c", "1", "--grid", "64", "norms"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_is_deterministic() {
    let args = ["--a", "2", "--b", "0.5", "--c", "1", "--seed", "5", "verify"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    assert_eq!(first.stdout, second.stdout);
    let xml = String::from_utf8(first.stdout).unwrap();
    assert!(xml.contains("failures=\"0\""));
    assert!(!xml.contains("timestamp"));
}

#[test]
fn verify_skips_double_root() {
    let out = run(&["--a", "1", "--b", "2", "--c", "-1", "verify"]);
    assert_eq!(out.status.code(), Some(0));
    let xml = String::from_utf8(out.stdout).unwrap();
    assert!(xml.contains("<skipped message=\"skipped n = 0"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped n = 0"));
}

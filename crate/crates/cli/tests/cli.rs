use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_windopf"))
}

fn case(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/matpower").join(format!("{name}.m"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_samples(dir: &Path) -> PathBuf {
    // Deterministic two-cluster sample without an RNG dependency.
    let mut text = String::from("mw\n");
    for i in 0..4000u64 {
        let u = ((i.wrapping_mul(2654435761) % 10007) as f64 + 0.5) / 10007.0;
        let w = ((i.wrapping_mul(40503) % 9973) as f64 + 0.5) / 9973.0;
        let z = (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * w).cos();
        let x = if i % 5 < 3 { 50.0 + 8.0 * z } else { 130.0 + 15.0 * z };
        text.push_str(&format!("{}\n", x.clamp(0.0, 200.0)));
    }
    let p = dir.join("wind.csv");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn missing_case_is_an_input_error() {
    let o = run(&["solve", "missing.m"]);
    assert_eq!(code(&o), 2);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "case file not found");
}

#[test]
fn bad_wind_spec_is_rejected() {
    let c = case("case9");
    let o = run(&["solve", c.to_str().unwrap(), "--wind", "bus=5,kl=1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let c = case("case9");
    let mut previous: Option<Vec<Vec<u8>>> = None;
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = run(&["solve", c.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains("converged") && stdout.contains("objective error"));
        let files: Vec<Vec<u8>> =
            ["solution.json", "trace.json", "errors.csv", "summary.json"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
        let sol: serde_json::Value = serde_json::from_slice(&files[0]).unwrap();
        assert_eq!(sol["status"], "converged");
        if let Some(prev) = &previous {
            assert_eq!(prev, &files);
        }
        previous = Some(files);
    }
}

#[test]
fn json_error_report_and_iteration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let c = case("case9");
    let o = run(&["solve", c.to_str().unwrap(), "--max-iter", "1", "--format", "json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("errors.json")).unwrap()).unwrap();
    assert_eq!(report["branches"].as_array().unwrap().len(), 9);
}

#[test]
fn infeasible_case_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let c = case("case9");
    let o = run(&["solve", c.to_str().unwrap(), "--load-scale", "50", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(dir.path().join("failed_program.txt").exists());
}

#[test]
fn fit_gmm_is_deterministic_and_feeds_solve() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_samples(dir.path());
    let g1 = dir.path().join("g1.json");
    let g2 = dir.path().join("g2.json");
    for g in [&g1, &g2] {
        let o = run(&["fit-gmm", "--data", data.to_str().unwrap(), "-K", "2", "--seed", "7", "--out", g.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&g1).unwrap(), fs::read(&g2).unwrap());
    let model: serde_json::Value = serde_json::from_slice(&fs::read(&g1).unwrap()).unwrap();
    assert_eq!(model["weights"].as_array().unwrap().len(), 2);

    let out = dir.path().join("run");
    let wind = format!("bus=5,kl=50,kh=60,pf=0.975,gmm={},cap=200", g1.display());
    let c = case("case30");
    let o = run(&["solve", c.to_str().unwrap(), "--wind", &wind, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("scheduled wind") && stdout.contains('%'));

    let o = run(&["fit-gmm", "--data", dir.path().join("nope.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn fit_gmm_single_component_matches_moments() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_samples(dir.path());
    let o = run(&["fit-gmm", "--data", data.to_str().unwrap(), "-K", "1"]);
    assert_eq!(code(&o), 0);
    let model: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let xs: Vec<f64> = fs::read_to_string(&data).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    assert!((model["means"][0].as_f64().unwrap() - mean).abs() < 1e-8);
    assert!((model["stddevs"][0].as_f64().unwrap() - var.sqrt()).abs() < 1e-8);
}

#[test]
fn windcost_curves() {
    let dir = tempfile::tempdir().unwrap();
    let gmm = dir.path().join("g.json");
    fs::write(&gmm, r#"{"K":1,"weights":[1.0],"means":[80.0],"stddevs":[20.0],"support_max":200.0}"#).unwrap();
    let o = run(&["windcost", "--gmm", gmm.to_str().unwrap(), "--kl", "50", "--kh", "20,60", "--points", "41"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 82);
    let argmin = |kh: f64| {
        rows.iter().filter(|r| r[1] == kh).min_by(|a, b| a[5].total_cmp(&b[5])).unwrap()[2]
    };
    // The cheapest schedule does not move down as k_H grows.
    assert!(argmin(60.0) >= argmin(20.0));

    let o = run(&["windcost", "--gmm", gmm.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "k_l,k_h,p_schedule,f_l,f_h,total");
}

#[test]
fn benchmark_rows_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["benchmark", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1);

    let c9 = case("case9");
    let o = run(&[
        "benchmark",
        c9.to_str().unwrap(),
        "missing.m",
        "--load-scales",
        "0.9,1.1",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("benchmark.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r["status"] == "converged").count(), 2);
    assert!(rows.iter().any(|r| r["error"].as_str().unwrap().contains("case file not found")));
}

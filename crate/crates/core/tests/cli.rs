use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use serde_json::Value;
use tempfile::TempDir;

use tre_kit::matrix_io::{read_hermitian, to_json_string, write_matrix};
use tre_kit::operator::{DensityMatrix, HermitianMatrix};

fn tre_kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tre-kit"))
        .args(args)
        .env_remove("TRE_KIT_SEED")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, m: &HermitianMatrix) -> String {
    let path = dir.path().join(name);
    write_matrix(&path, m).unwrap();
    path.to_str().unwrap().to_string()
}

fn diag(d: &[f64]) -> HermitianMatrix {
    DensityMatrix::from_real_diagonal(d).unwrap().matrix().clone()
}

fn qubit_plus() -> HermitianMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]).unwrap().matrix().clone()
}

#[test]
fn compute_identical_states_is_zero() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &qubit_plus());
    let out = tre_kit(&["compute", "--rho", &rho, "--sigma", &rho, "--a", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["value"].as_f64().unwrap().abs() < 1e-14);
    assert_eq!(v["a"].as_f64(), Some(0.5));
    assert_eq!(v["support_contained"], Value::Bool(true));
}

#[test]
fn compute_ordinary_on_orthogonal_pure_states_is_inf() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &diag(&[1.0, 0.0]));
    let sigma = write(&dir, "sigma.json", &diag(&[0.0, 1.0]));
    let out = tre_kit(&["compute", "--rho", &rho, "--sigma", &sigma, "--ordinary"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["value"], Value::String("inf".into()));
    assert_eq!(v["a"], Value::String("ordinary".into()));
    assert_eq!(v["support_contained"], Value::Bool(false));
}

#[test]
fn compute_orthogonal_blocks_is_one() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &diag(&[0.3, 0.7, 0.0, 0.0]));
    let sigma = write(&dir, "sigma.json", &diag(&[0.0, 0.0, 0.6, 0.4]));
    let out = tre_kit(&["compute", "--rho", &rho, "--sigma", &sigma, "--a", "0.5"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn compute_with_gradient() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &diag(&[0.3, 0.7]));
    let sigma = write(&dir, "sigma.json", &diag(&[0.5, 0.5]));
    let out = tre_kit(&["compute", "--rho", &rho, "--sigma", &sigma, "--ordinary", "--gradient", "2"]);
    assert_eq!(code(&out), 0);
    let g = &json(&out)["gradient"];
    assert_eq!(g["dim"].as_u64(), Some(2));
    // diag(−a_i/b_i)
    let entry = |i: usize| g["entries"][i][i][0].as_f64().unwrap();
    assert!((entry(0) + 0.6).abs() < 1e-14 && (entry(1) + 1.4).abs() < 1e-14);
}

#[test]
fn compute_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &diag(&[0.3, 0.7]));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"entries\": [[1]]}").unwrap();
    let bad = bad.to_str().unwrap();
    let missing = dir.path().join("missing.json");
    let missing = missing.to_str().unwrap();
    let unnormalised = write(&dir, "big.json", &HermitianMatrix::from_real_diagonal(&[2.0, 1.0]));
    for args in [
        vec!["compute", "--rho", bad, "--sigma", &rho, "--a", "0.5"],
        vec!["compute", "--rho", missing, "--sigma", &rho, "--a", "0.5"],
        vec!["compute", "--rho", &rho, "--sigma", &rho, "--a", "1.5"],
        vec!["compute", "--rho", &rho, "--sigma", &rho],
        vec!["compute", "--rho", &unnormalised, "--sigma", &rho, "--a", "0.5"],
        vec!["compute", "--rho", &rho, "--sigma", &rho, "--a", "0.5", "--gradient", "3"],
    ] {
        assert_eq!(code(&tre_kit(&args)), 2, "{args:?}");
    }
}

#[test]
fn verify_all_small_run_passes() {
    let out = tre_kit(&["verify", "--theorem", "all", "--trials", "100", "--dim", "2", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["seed"].as_u64(), Some(7));
    let reports = v["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        for key in ["check_name", "trials", "violations", "min_margin", "quantiles", "seed", "tol", "config_digest"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn verify_equality_family_is_sharp() {
    let out = tre_kit(&[
        "verify", "--theorem", "triangle2", "--equality-family", "--a", "0.5", "--t", "0.3", "--trials", "20",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let margin = v["reports"][0]["min_margin"].as_f64().unwrap();
    assert!(margin.abs() <= 1e-8);
    assert_eq!(v["reports"][0]["kind"], Value::String("equality".into()));
}

#[test]
fn verify_flag_errors_exit_2() {
    assert_eq!(code(&tre_kit(&["verify", "--theorem", "pythagoras"])), 2);
    assert_eq!(code(&tre_kit(&["verify", "--theorem", "triangle1", "--tol", "-1"])), 2);
    assert_eq!(code(&tre_kit(&["verify", "--theorem", "rbts", "--equality-family"])), 2);
    assert_eq!(code(&tre_kit(&["verify", "--theorem", "triangle1", "--a", "0"])), 2);
    assert_eq!(code(&tre_kit(&["verify", "--theorem", "triangle1", "--dim", "1"])), 2);
    assert_eq!(code(&tre_kit(&["frobnicate"])), 2);
    assert_eq!(code(&tre_kit(&["--help"])), 0);
}

/// The first Lieb margin is an identity for the logarithm, so its margins are pure rounding
/// noise of either sign; a sub-ulp tolerance turns them into violations.
#[test]
fn verify_violation_exits_1_and_dumps_inputs() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("failures");
    let out = tre_kit(&[
        "verify", "--theorem", "aux", "--trials", "30", "--dim", "3", "--tol", "1e-300", "--dump-failures",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["pass"], Value::Bool(false));
    let lieb1 = v["reports"].as_array().unwrap().iter().find(|r| r["check_name"] == "lieb1").unwrap();
    assert!(lieb1["violations"].as_u64().unwrap() > 0);

    let files: Vec<PathBuf> = std::fs::read_dir(&dump)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    assert!(!files.is_empty());
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let m = read_hermitian(f).unwrap();
        assert_eq!(to_json_string(m.entries()), text, "{}", f.display());
    }
}

#[test]
fn verify_seed_from_environment_and_csv() {
    let out = Command::new(env!("CARGO_BIN_EXE_tre-kit"))
        .args(["verify", "--theorem", "fannes", "--trials", "10", "--dim", "2", "--format", "csv"])
        .env("TRE_KIT_SEED", "4242")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("check_name,kind,trials,violations,errors,min_margin,p1,p50,p99,seed,tol,config_digest")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "s1_fannes");
    assert_eq!(row[9], "4242");
}

#[test]
fn verify_report_file_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, workers: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let out = tre_kit(&[
            "verify", "--theorem", "tderiv", "--trials", "40", "--seed", "3", "--workers", workers, "--report",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        assert!(out.stdout.is_empty());
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.json", "1"), run("b.json", "3"));
}

fn sweep_rows(out: &Output) -> Vec<Vec<f64>> {
    let csv = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("a,t,coefficient,bound_tight,bound_linear,achieved"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn sweep_cells() {
    let out = tre_kit(&["sweep", "--a-grid", "0.5", "--t-grid", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(sweep_rows(&out), vec![vec![0.5, 0.0, 1.0 / 2f64.ln(), 0.0, 0.0, 0.0]]);

    let out = tre_kit(&["sweep", "--a-grid", "0.1,0.5,0.99", "--t-grid", "0.2,0.8"]);
    let rows = sweep_rows(&out);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!((r[5] - r[3]).abs() <= 1e-8);
        assert!(r[3] <= r[4] + 1e-12);
    }
    // coefficient decreases in a towards 1
    assert!(rows[0][2] > rows[2][2] && rows[2][2] > rows[4][2]);
    assert!((rows[4][4] / rows[4][1] - 1.0).abs() < 1e-2);
}

#[test]
fn sweep_rejects_bad_grids() {
    assert_eq!(code(&tre_kit(&["sweep", "--a-grid", "1.2", "--t-grid", "0.5"])), 2);
    assert_eq!(code(&tre_kit(&["sweep", "--a-grid", "0.5", "--t-grid", "-0.1"])), 2);
    assert_eq!(code(&tre_kit(&["sweep", "--a-grid", "x", "--t-grid", "0.5"])), 2);
    assert_eq!(code(&tre_kit(&["sweep", "--a-grid", "0.5"])), 2);
}

fn limits(dir: &TempDir, rho: &HermitianMatrix, sigma: &HermitianMatrix, schedule: &str) -> Value {
    let r = write(dir, "rho.json", rho);
    let s = write(dir, "sigma.json", sigma);
    let out = tre_kit(&["limits", "--rho", &r, "--sigma", &s, "--a-schedule", schedule]);
    assert_eq!(code(&out), 0);
    json(&out)
}

#[test]
fn limits_identical_states() {
    let dir = TempDir::new().unwrap();
    let rho = diag(&[0.2, 0.3, 0.5]);
    let v = limits(&dir, &rho, &rho, "0.01,0.5,0.99");
    assert_eq!(v["s0"].as_f64(), Some(0.0));
    assert_eq!(v["s1"].as_f64(), Some(0.0));
    for e in v["schedule"].as_array().unwrap() {
        assert!(e["value"].as_f64().unwrap().abs() < 1e-14);
    }
}

#[test]
fn limits_pure_against_maximally_mixed() {
    let dir = TempDir::new().unwrap();
    let v = limits(&dir, &diag(&[1.0, 0.0]), &diag(&[0.5, 0.5]), "1e-2,1e-4,1e-6");
    assert!(v["s0"].as_f64().unwrap().abs() < 1e-15);
    assert!((v["s1"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(v["support_contained"], Value::Bool(true));
    let gaps: Vec<f64> = v["schedule"].as_array().unwrap().iter().map(|e| e["gap_s0"].as_f64().unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn limits_rejects_schedule_outside_unit_interval() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "rho.json", &diag(&[0.5, 0.5]));
    let out = tre_kit(&["limits", "--rho", &r, "--sigma", &r, "--a-schedule", "0,0.5"]);
    assert_eq!(code(&out), 2);
    assert!(Path::new(&r).exists());
}

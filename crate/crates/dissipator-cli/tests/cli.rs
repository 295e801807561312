//! End-to-end tests of the `dissipator` binary: exit codes, file formats,
//! report integrity, and determinism.

use std::path::Path;
use std::process::{Command, Output};

use nalgebra::DMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dissipator"))
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn example1_files(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let a = dir.join("A.csv");
    let b = dir.join("B.csv");
    write(
        &a,
        "-0.2,1.6,0.2,2.6,-0.4\n-0.2,-0.8,-1.2,-0.7,-1.8\n1.4,0.7,-1.1,0.2,0.8\n\
         0.3,0.8,0.1,-0.1,-0.9\n0.2,-0.2,0.7,-1.9,0.1\n",
    );
    write(&b, "0.6,0.5\n-0.2,0.3\n0.5,0.0\n0.2,0.6\n0.6,-0.6\n");
    (a, b)
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no exit code")
}

#[test]
fn check_feasible_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let output = bin().args(["check"]).arg(&a).arg(&b).output().unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    let json: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(json["feasible"], true);
    assert!(json["margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn check_infeasible_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.csv");
    let b = dir.path().join("B.csv");
    write(&a, "1.0,0.0\n0.0,-1.0\n");
    write(&b, "0.0\n1.0\n");
    let output = bin().args(["check"]).arg(&a).arg(&b).output().unwrap();
    assert_eq!(code(&output), 2);
    let json: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(json["feasible"], false);
}

#[test]
fn check_dimension_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.csv");
    let b = dir.path().join("B.csv");
    write(&a, "1.0,0.0\n0.0,-1.0\n");
    write(&b, "1.0\n0.0\n0.5\n"); // 3 rows against a 2x2 A
    let output = bin().args(["check"]).arg(&a).arg(&b).output().unwrap();
    assert_eq!(code(&output), 1);
}

#[test]
fn malformed_csv_names_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.csv");
    let b = dir.path().join("B.csv");
    write(&a, "1.0,0.0\n0.0,bogus\n");
    write(&b, "1.0\n0.0\n");
    let output = bin().args(["check"]).arg(&a).arg(&b).output().unwrap();
    assert_eq!(code(&output), 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":2:2:"), "stderr: {stderr}");
}

#[test]
fn matrix_market_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.mtx");
    let b = dir.path().join("B.csv");
    // column-major 2x2: diag(-1, -2)
    write(
        &a,
        "%%MatrixMarket matrix array real general\n2 2\n-1.0\n0.0\n0.0\n-2.0\n",
    );
    write(&b, "1.0\n0.5\n");
    let output = bin().args(["check"]).arg(&a).arg(&b).output().unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
}

#[test]
fn solve_gl_reproduces_table1_and_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let report_path = dir.path().join("report.json");
    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "gl", "--m", "2", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let norm_f = report["norm_frobenius"].as_f64().unwrap();
    assert!((norm_f - 2.3063).abs() <= 5e-3, "norm_f = {norm_f}");
    assert_eq!(report["classification"], "weak");

    // round-trip integrity: the embedded K re-verifies to the recorded
    // classification
    let rows = report["k"]["inline"].as_array().unwrap();
    let q = rows.len();
    let n = rows[0].as_array().unwrap().len();
    let k = DMatrix::from_fn(q, n, |i, j| {
        rows[i].as_array().unwrap()[j].as_f64().unwrap()
    });
    let pair = dissipator::bench::example1();
    let tol = report["parameters"]["tol"].as_f64().unwrap().max(1e-5);
    let verification = dissipator::model::verify_dissipating(&pair, &k, tol).unwrap();
    assert_eq!(
        format!("{}", verification.classification),
        report["classification"].as_str().unwrap()
    );
}

#[test]
fn solve_spectral_is_strict() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "spectral"])
        .output()
        .unwrap();
    assert_eq!(code(&output), 0);
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["classification"], "strict");
}

#[test]
fn solve_infeasible_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.csv");
    let b = dir.path().join("B.csv");
    write(&a, "1.0,0.0\n0.0,-1.0\n");
    write(&b, "0.0\n1.0\n");
    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "gl"])
        .output()
        .unwrap();
    assert_eq!(code(&output), 2);
}

#[test]
fn solve_reports_are_deterministic_modulo_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let run = || -> serde_json::Value {
        let output = bin()
            .args(["solve"])
            .arg(&a)
            .arg(&b)
            .args(["--method", "gl", "--m", "2", "--seed", "11"])
            .output()
            .unwrap();
        assert_eq!(code(&output), 0);
        serde_json::from_slice(&output.stdout).unwrap()
    };
    let mut first = run();
    let mut second = run();
    first["wall_time_seconds"] = 0.into();
    second["wall_time_seconds"] = 0.into();
    assert_eq!(
        serde_json::to_string(&first).unwrap(),
        serde_json::to_string(&second).unwrap()
    );
}

#[test]
fn seed_precedence_flag_over_env() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "spectral", "--seed", "5"])
        .env("DISSIPATOR_SEED", "9")
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["seed"], 5);

    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "spectral"])
        .env("DISSIPATOR_SEED", "9")
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["seed"], 9);
}

#[test]
fn solve_with_delta_reports_both_classifications() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "gl", "--m", "2", "--delta", "0.1"])
        .output()
        .unwrap();
    assert_eq!(code(&output), 0);
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["shifted"]["classification_shifted"], "weak");
    assert_eq!(report["shifted"]["classification_original"], "strict");
    // rightmost eigenvalue of the original system sits near -delta
    let rightmost = report["rightmost"][0].as_f64().unwrap();
    assert!((rightmost + 0.1).abs() <= 1e-4, "rightmost = {rightmost}");
}

#[test]
fn fov_of_normal_matrix_is_real_segment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.csv");
    write(&a, "-1.0,0.0\n0.0,-2.0\n");
    let out = dir.path().join("boundary.csv");
    let output = bin()
        .args(["fov"])
        .arg(&a)
        .args(["--angles", "64", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,re,im"));
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!(fields[1] >= -2.0 - 1e-8 && fields[1] <= -1.0 + 1e-8);
        assert!(fields[2].abs() < 1e-8);
    }
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("boundary.csv.meta.json")).unwrap(),
    )
    .unwrap();
    assert!((meta["abscissa"].as_f64().unwrap() + 1.0).abs() < 1e-10);
}

#[test]
fn fov_with_gl_feedback_reports_flat_segment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let report_path = dir.path().join("report.json");
    let status = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "gl", "--m", "2", "--out"])
        .arg(&report_path)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let rows = report["k"]["inline"].as_array().unwrap();
    let k_csv: String = rows
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|v| format!("{:.16e}", v.as_f64().unwrap()))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n");
    let k_path = dir.path().join("K.csv");
    write(&k_path, &k_csv);

    let out = dir.path().join("closed.json");
    let output = bin()
        .args(["fov"])
        .arg(&a)
        .arg(&b)
        .arg(&k_path)
        .args(["--angles", "360", "--tol", "1e-4", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    let boundary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let sigma = boundary["flat_segment"].as_f64().expect("sigma present");
    assert!(sigma > 0.0);
    let rightmost = boundary["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["re"].as_f64().unwrap())
        .fold(f64::MIN, f64::max);
    assert!(rightmost <= 1e-5, "rightmost = {rightmost}");
}

#[test]
fn bench_table1_reproduces_gl_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let output = bin()
        .args(["bench", "--preset", "table1", "--jobs", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    let table = std::fs::read_to_string(out.join("table1.csv")).unwrap();
    let gl_row = table
        .lines()
        .find(|l| l.starts_with("gl,2"))
        .expect("gl row present");
    let fields: Vec<&str> = gl_row.split(',').collect();
    let norm_f: f64 = fields[3].parse().unwrap();
    assert!((norm_f - 2.3063).abs() <= 5e-3, "norm_f = {norm_f}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["preset"], "table1");
}

#[test]
fn solve_nonconvergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = example1_files(dir.path());
    let report_path = dir.path().join("report.json");
    // one outer iteration cannot reach the root
    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "gl", "--m", "2", "--max-iter", "1", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&output), 3, "{output:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["convergence"]["converged"], false);
    assert!(!report["convergence"]["warnings"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn solve_gl_plus_on_clustered_pair() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dissipator::bench::clustered_pair(20, 6, 0.01, 1).unwrap();
    let a = dir.path().join("A.csv");
    let b = dir.path().join("B.csv");
    let to_csv = |m: &DMatrix<f64>| -> String {
        (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| format!("{:.16e}", m[(i, j)]))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    write(&a, &to_csv(pair.a()));
    write(&b, &to_csv(pair.b()));
    let output = bin()
        .args(["solve"])
        .arg(&a)
        .arg(&b)
        .args(["--method", "gl+", "--m", "6"])
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["classification"], "weak");
    let f_final = report["convergence"]["f_final"].as_f64().unwrap();
    assert!(f_final <= 1e-8, "f_final = {f_final}");
}

#[test]
fn bench_family_sweep_writes_rows_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fam");
    let output = bin()
        .args([
            "bench",
            "--family",
            "grcar",
            "--params",
            r#"{"n": 20, "shift": 0.52}"#,
            "--seeds",
            "1,2",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    let csv = std::fs::read_to_string(out.join("family.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3); // header + one row per seed
    for line in csv.lines().skip(1) {
        assert!(line.contains("weak"), "line: {line}");
        assert!(line.ends_with(",ok"));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["instances"].as_array().unwrap().len(), 2);
}

#[test]
fn bench_empty_seed_list_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let output = bin()
        .args(["bench", "--preset", "table1", "--seeds", "", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&output), 1, "{output:?}");
}

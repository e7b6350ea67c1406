use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stiefel-fourier"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stiefel-fourier"))
        .args(args)
        .env("STIEFEL_FOURIER_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `J0(x) = (1/π) ∫₀^π cos(x sin θ) dθ`; the periodic trapezoid rule is
/// spectrally accurate here.
fn j0(x: f64) -> f64 {
    let m = 400;
    (0..m).map(|i| (x * (PI * i as f64 / m as f64).sin()).cos()).sum::<f64>() / m as f64
}

#[test]
fn eval_closed_form_n4() {
    let v = json(&["eval", "--n", "4", "--k", "2", "--spectrum", "2,1", "--method", "closed-form"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "eval");
    assert_eq!(v["method"], "closed-form");
    let (a, b) = (2.0f64, 1.0f64);
    let expect = 2.0 * PI / (a * b) * (j0(2.0 * PI * (a - b)) - j0(2.0 * PI * (a + b)));
    let got = v["value"].as_f64().unwrap();
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
}

#[test]
fn eval_zero_frequency_is_total_mass() {
    let v = json(&["eval", "--n", "3", "--k", "2", "--spectrum", "0,0"]);
    let got = v["value"].as_f64().unwrap();
    assert!((got - 8.0 * PI * PI).abs() < 1e-12);
    assert!(v["trail"].as_array().unwrap().len() >= 2);
}

#[test]
fn probability_normalization_divides_by_mass() {
    let v = json(&["eval", "--n", "3", "--k", "2", "--spectrum", "0,0", "--normalization", "probability"]);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert!((v["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn json_numbers_have_seventeen_digits() {
    let out = run(&["eval", "--n", "4", "--k", "2", "--spectrum", "2,1", "--format", "json"]);
    let text = stdout(&out);
    let value = text.split("\"value\":").nth(1).unwrap().split(',').next().unwrap();
    let mantissa = value.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{value}");
}

#[test]
fn degenerate_asymptotic_request_exits_one_naming_pair() {
    let out = run(&["eval", "--n", "5", "--k", "2", "--spectrum", "1,1", "--method", "asymptotic"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("(1,2)"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["eval", "--n", "4", "--k", "2", "--spectrum", "1"][..],
        &["eval", "--n", "4", "--k", "2"],
        &["eval", "--n", "4", "--k", "2", "--spectrum", "1,-1"],
        &["eval", "--n", "4", "--k", "2", "--spectrum", "1,1", "--method", "bogus"],
        &["eval", "--n", "4", "--k", "2", "--spectrum", "1,1", "--samples", "5"],
        &["frobnicate"],
        &["eval", "--matrix", "/nonexistent/matrix.json"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn unsupported_method_exits_one() {
    let out = run(&["eval", "--n", "5", "--k", "3", "--spectrum", "3,2,1", "--method", "closed-form"]);
    assert_eq!(out.status.code(), Some(1));
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn matrix_input_goes_through_svd() {
    // Rotated frames: singular values (1, 1), then (2, 1).
    let (c, s) = (0.6, 0.8);
    let json_path = temp_file("rotated.json", &format!("[[{c}, {s}], [{}, {c}], [0, 0], [0, 0]]", -s));
    let csv_path = temp_file("rotated.csv", &format!("{c},{s}\n{},{c}\n0,0\n0,0\n", -s));
    let reference = json(&["eval", "--n", "4", "--k", "2", "--spectrum", "2,1"])["value"].as_f64().unwrap();
    let from_file = |p: &PathBuf| json(&["eval", "--matrix", p.to_str().unwrap()])["value"].as_f64().unwrap();
    let ones = json(&["eval", "--n", "4", "--k", "2", "--spectrum", "1,1"])["value"].as_f64().unwrap();
    assert!((from_file(&json_path) - ones).abs() < 1e-12);
    assert!((from_file(&csv_path) - ones).abs() < 1e-12);

    let m = temp_file("diag21.json", &format!("[[{}, {}], [{}, {}], [0, 0], [0, 0]]", 2.0 * c, s, -2.0 * s, c));
    let v = json(&["eval", "--matrix", m.to_str().unwrap()]);
    assert!((v["value"].as_f64().unwrap() - reference).abs() < 1e-12);
    assert_eq!(v["n"], 4);
    assert_eq!(v["k"], 2);
    assert!(v["trail"][0].as_str().unwrap().starts_with("svd"));
}

#[test]
fn matrix_shape_must_match_flags() {
    let p = temp_file("shape.json", "[[1, 0], [0, 1], [0, 0]]");
    let out = run(&["eval", "--n", "4", "--matrix", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_lists_methods_and_exact_ones_agree() {
    let v = json(&["compare", "--n", "4", "--k", "2", "--spectrum", "2,1", "--samples", "200000"]);
    let methods = v["methods"].as_array().unwrap();
    let names: Vec<&str> = methods.iter().map(|m| m["method"].as_str().unwrap()).collect();
    assert_eq!(names, ["closed-form", "quadrature", "recursive", "mc", "asymptotic"]);
    assert!(methods.iter().all(|m| m["status"] == "ok"));
    for p in v["pairs"].as_array().unwrap() {
        let consistent = ["closed-form", "quadrature", "recursive", "mc"];
        if consistent.contains(&p["a"].as_str().unwrap()) && consistent.contains(&p["b"].as_str().unwrap()) {
            assert_eq!(p["flagged"], false, "{p}");
        }
    }
}

#[test]
fn sweep_csv_has_documented_columns_and_order_one_decay() {
    let out = run(&["sweep", "--n", "4", "--k", "2", "--direction", "2,1", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,exact,leading,abs_err,scaled_err,rel_err"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    let taus: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(taus, [8.0, 16.0, 32.0, 64.0, 128.0]);
    for w in rows.windows(2) {
        let ratio = w[0][5] / w[1][5];
        assert!((1.8..2.2).contains(&ratio), "rel_err ratio {ratio}");
    }
}

#[test]
fn sweep_degenerate_direction_keeps_exact_column() {
    let v = json(&["sweep", "--n", "4", "--k", "2", "--direction", "1,1", "--taus", "8,16"]);
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["exact"].is_f64() && r["leading"].is_null()));
    assert_eq!(v["notes"].as_array().unwrap().len(), 2);
}

#[test]
fn moments_k2() {
    let v = json(&["moments", "--k", "2", "--max-m", "4", "--samples", "200000"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["mean"].as_f64(), Some(1.0));
    let m1 = &rows[1];
    assert!(m1["mean"].as_f64().unwrap().abs() <= 3.0 * m1["std_error"].as_f64().unwrap());
    let m2 = &rows[2];
    assert!((m2["mean"].as_f64().unwrap() - 1.0).abs() <= 3.0 * m2["std_error"].as_f64().unwrap());
}

#[test]
fn verify_quick_passes() {
    let out = run(&["verify", "--quick"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains(" 0 failed"));
}

#[test]
fn verify_sign_check_separates_conventions() {
    let v = json(&["verify", "--sign-check"]);
    assert_eq!(v["passed"], true);
    for pair in v["separation"].as_array().unwrap() {
        assert!(pair[1].as_f64().unwrap() >= 10.0);
    }
}

#[test]
fn output_is_identical_across_thread_counts() {
    let args = ["eval", "--n", "5", "--k", "3", "--spectrum", "2,1,0.5", "--method", "mc", "--samples", "20000", "--seed", "7", "--format", "json"];
    let one = run_env(&args, "1");
    let four = run_env(&args, "4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run(&args).stdout, one.stdout);
}

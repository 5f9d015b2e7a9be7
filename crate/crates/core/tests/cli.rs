//! End-to-end tests of the `singular-mrl` binary.

use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};

use singular_mrl::{cdf, mrl, EvalConfig, PSingularParams};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_singular-mrl"));
    c.env_remove("SINGULAR_MRL_TOLERANCE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Second line of a two-line CSV, split into fields.
fn csv_row(o: &Output) -> Vec<String> {
    let text = stdout(o);
    let mut lines = text.lines();
    lines.next().expect("header");
    lines.next().expect("row").split(',').map(str::to_owned).collect()
}

#[test]
fn fixpoint_at_cantor() {
    let o = run(&["fixpoint", "--p", "1", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("p,x_star,residual,bracket_lo,bracket_hi,closed_form,sign_changes,bisections\n"));
    let row = csv_row(&o);
    let x: f64 = row[1].parse().unwrap();
    let residual: f64 = row[2].parse().unwrap();
    assert!((x - 5.0 / 12.0).abs() <= 1e-9);
    assert!(residual.abs() <= 1e-10);
    assert_eq!(row[6], "1");

    let text = stdout(&run(&["fixpoint", "--p", "1"]));
    assert!(text.contains("x_star       4.16666666666666"), "{text}");
}

#[test]
fn cdf_off_plateau() {
    let o = run(&["cdf", "--p", "3", "--x", "0.2", "--format", "csv"]);
    assert!(o.status.success());
    let v: f64 = csv_row(&o)[2].parse().unwrap();
    assert!(v > 0.0 && v < 0.25);
}

#[test]
fn csv_values_round_trip_exactly() {
    let config = EvalConfig::default();
    for (p, x) in [(1.0, 0.3), (0.37, 0.81), (12.0, 0.05)] {
        let params = PSingularParams::new(p).unwrap();
        let (ps, xs) = (p.to_string(), x.to_string());
        let o = run(&["cdf", "--p", &ps, "--x", &xs, "--format", "csv"]);
        let v: f64 = csv_row(&o)[2].parse().unwrap();
        assert_eq!(v.to_bits(), cdf(&params, x, &config).unwrap().to_bits());
        let o = run(&["mrl", "--p", &ps, "--x", &xs, "--format", "csv"]);
        let v: f64 = csv_row(&o)[2].parse().unwrap();
        assert_eq!(v.to_bits(), mrl(&params, x, &config).unwrap().value.to_bits());
    }
}

#[test]
fn json_outputs_parse() {
    let o = run(&["gmrl", "--x", "0.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["gmrl"].as_f64().unwrap() - 2.0 / 3.0).abs() <= 1e-9);

    let o = run(&["statics", "--p-list", "0.2,1,5", "--format", "json"]);
    let v: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    let prices: Vec<f64> = v.iter().map(|r| r["optimal_price"].as_f64().unwrap()).collect();
    assert_eq!(prices.len(), 3);
    assert!(prices.windows(2).all(|w| w[0] > w[1]));

    let o = run(&["price", "--grid", "11", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["payoff_curve"].as_array().unwrap().len(), 11);

    let o = run(&["plot-data", "--n-initial", "5", "--iterations", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["cloud"].as_array().unwrap().len() > 10);
    assert!(v["mrl"].as_array().unwrap().len() >= 1000);
}

#[test]
fn distinct_exit_codes() {
    assert_eq!(run(&["cdf", "--x", "1.5"]).status.code(), Some(3));
    assert_eq!(run(&["gmrl", "--x", "0"]).status.code(), Some(3));
    assert_eq!(run(&["cdf", "--p", "-1", "--x", "0.5"]).status.code(), Some(4));
    assert_eq!(run(&["fixpoint", "--p", "0"]).status.code(), Some(4));
    assert_eq!(run(&["statics", "--p-list", "1,-2"]).status.code(), Some(4));
    assert_eq!(run(&["plot-data", "--n-initial", "1"]).status.code(), Some(4));
    assert_eq!(run(&["plot-data", "--iterations", "61"]).status.code(), Some(5));
    assert_eq!(run(&["cdf", "--x", "0.5", "--tolerance", "0"]).status.code(), Some(4));
    assert_eq!(run(&["cdf", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["cdf", "--x", "0.5", "--format", "xml"]).status.code(), Some(2));
    let o = run(&["cdf", "--x", "0.5", "--out", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(7));
    assert!(!o.stderr.is_empty());
}

#[test]
fn output_is_deterministic() {
    let args = [
        "plot-data",
        "--p",
        "0.4",
        "--n-initial",
        "20",
        "--iterations",
        "6",
        "--format",
        "csv",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let args = ["statics", "--p-list", "0.01,0.5,3,100", "--format", "text"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn plot_data_layout_and_side_file() {
    let o = run(&["plot-data", "--n-initial", "2", "--iterations", "0", "--format", "csv"]);
    let text = stdout(&o);
    let (cloud, curve) = text.split_once("\n\n").unwrap();
    let cloud: Vec<&str> = cloud.lines().collect();
    assert_eq!(cloud[0], "x,F");
    assert_eq!(cloud.len(), 5);
    assert!(curve.starts_with("x,m\n"));

    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("cloud.csv");
    let side = dir.path().join("mrl.csv");
    let o = run(&[
        "plot-data",
        "--n-initial",
        "10",
        "--iterations",
        "4",
        "--out",
        main.to_str().unwrap(),
        "--mrl-out",
        side.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let cloud = std::fs::read_to_string(&main).unwrap();
    let curve = std::fs::read_to_string(&side).unwrap();
    assert!(cloud.starts_with("x,F\n") && !cloud.contains("\n\n"));
    assert!(curve.starts_with("x,m\n"));
    let xs: Vec<f64> = cloud
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn price_curve_side_file() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let o = run(&[
        "price",
        "--p",
        "2",
        "--grid",
        "50",
        "--format",
        "csv",
        "--curve-out",
        curve.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let row = csv_row(&o);
    assert!((row[1].parse::<f64>().unwrap() - 0.4).abs() <= 1e-9);
    let text = std::fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("price,payoff\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn tolerance_from_environment() {
    // 1/4 never reaches a plateau, so its bound reflects the tolerance.
    let bound = |o: &Output| csv_row(o)[3].parse::<f64>().unwrap();
    let loose = bin()
        .args(["cdf", "--x", "0.25", "--format", "csv"])
        .env("SINGULAR_MRL_TOLERANCE", "1e-3")
        .output()
        .unwrap();
    let default = run(&["cdf", "--x", "0.25", "--format", "csv"]);
    assert!(bound(&loose) > 1e-6 && bound(&loose) <= 1e-3);
    assert!(bound(&default) <= 1e-10);
    let flag = bin()
        .args(["cdf", "--x", "0.25", "--format", "csv", "--tolerance", "1e-12"])
        .env("SINGULAR_MRL_TOLERANCE", "1e-3")
        .output()
        .unwrap();
    assert!(bound(&flag) <= 1e-12);
}

#[test]
fn default_plot_data_streams() {
    // The full cloud is ~2.6e8 points; read the head and hang up.
    let mut child = bin()
        .args(["plot-data", "--p", "1"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    assert_eq!(lines.next().unwrap().unwrap(), "x,F");
    assert_eq!(
        lines.next().unwrap().unwrap(),
        "0.0000000000000000e0,0.0000000000000000e0"
    );
    for _ in 0..1000 {
        lines.next().unwrap().unwrap();
    }
    drop(lines);
    assert!(child.wait().unwrap().success());
}

#[test]
fn verify_quick_reports_every_criterion() {
    let o = run(&["verify", "--quick", "--seed", "3"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    for (i, line) in lines.iter().enumerate() {
        assert!(line.starts_with(&format!("criterion {:>2} [PASS]", i + 1)), "{line}");
    }
}

#[test]
fn verify_fails_with_status_one_when_a_criterion_fails() {
    // A tolerance too loose for the 1e-9 anchors must fail the suite.
    let o = run(&["verify", "--quick", "--tolerance", "1e-4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL]"));
}

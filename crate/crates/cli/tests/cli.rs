use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn flowdepth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowdepth"))
        .args(args)
        .env_remove("FLOWDEPTH_GRID")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn dist_is_deterministic_and_correct() {
    let a = flowdepth(&["dist", "--psi2", "exp_map"]);
    let b = flowdepth(&["dist", "--psi2", "exp_map"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!((f(&v["d_F"]) - 1.0).abs() < 1e-6);
    assert!((f(&v["legacy_upper"]) - 2.0).abs() < 1e-6);
    // 17 significant digits
    assert!(String::from_utf8_lossy(&a.stdout).contains("1.0000000000000000e"));
}

#[test]
fn degenerate_map_is_infinitely_far() {
    let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    writeln!(file, "x,y\n0,0\n0.5,0.5\n0.7,0.5\n1,1").unwrap();
    let out = flowdepth(&["dist", "--psi2", file.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out)["d_F"], "infinite");
}

#[test]
fn exit_codes() {
    assert_eq!(
        flowdepth(&["dist", "--psi2", "exp_map", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(flowdepth(&["dist", "--psi2", "no_such_map"]).status.code(), Some(2));
    let domain = flowdepth(&["lift", "--lambda", "0.9", "--kappa", "0.9"]);
    assert_eq!(domain.status.code(), Some(3));
    assert_eq!(
        flowdepth(&["circle-bound", "--psi1", "warp:0.5,3"]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_filter_runs_only_that_module() {
    let out = flowdepth(&["verify", "--filter", "so3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let props = v["properties"].as_array().unwrap();
    assert!(!props.is_empty());
    assert!(props.iter().all(|p| p["name"].as_str().unwrap().starts_with("so3.")));
    assert_eq!(v["seed"], flowdepth::verify::DEFAULT_SEED);
}

#[test]
fn injected_fault_is_caught() {
    let out = flowdepth(&["verify", "--filter", "l1_interp", "--inject-fault", "min-sn-sign"]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_eq!(v["passed"], false);
    let failed: Vec<&str> = v["properties"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["passed"] == false)
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["l1_interp.lp_equivalence"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("l1_interp.lp_equivalence"));
}

#[test]
fn contour_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.csv");
    let out = flowdepth(&["contour", "--bary", "6", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let rows = flowdepth::contour::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    let direct = flowdepth::contour::run_contour(6, flowdepth::contour::ContourMetric::Flow, 4096).unwrap();
    assert_eq!(rows, direct);
}

#[test]
fn interp_reports_the_bump_optimum() {
    let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    writeln!(file, "x,u").unwrap();
    for i in 0..=8 {
        let x = i as f64 / 8.0;
        writeln!(file, "{x},{}", x * (1.0 - x)).unwrap();
    }
    let out = flowdepth(&["interp", "--input", file.path().to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["N"], 8);
    assert!((f(&v["min_weight"]) - 1.75).abs() < 1e-12);
    assert!((f(&v["lp_oracle"]) - 1.75).abs() < 1e-8);
    assert_eq!(v["witness_feasible"], true);
}

#[test]
fn grid_env_overrides_default() {
    let out = Command::new(env!("CARGO_BIN_EXE_flowdepth"))
        .args(["geodesic", "--psi2", "exp_map", "--k", "8"])
        .env("FLOWDEPTH_GRID", "256")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&out)["grid"], 256);
}

#[test]
fn realize_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = flowdepth(&[
        "realize",
        "--target",
        "exp_map",
        "--trajectory",
        path.to_str().unwrap(),
        "--trajectory-points",
        "4",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(f(&v["total_time"]) <= f(&v["budget"]));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x0,x_t"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[1], 1.0);
    assert_eq!(last[2], 1.0);
}

#[test]
fn so3_from_matrix_file() {
    let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    writeln!(file, "1,0,0\n0,0,-1\n0,1,0").unwrap();
    let out = flowdepth(&["so3", "--matrix", file.path().to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    let half_pi = std::f64::consts::FRAC_PI_2;
    assert!((f(&v["theta"]) - half_pi).abs() < 1e-12);
    assert!((f(&v["l1_log_upper"]) - half_pi).abs() < 1e-12);
}

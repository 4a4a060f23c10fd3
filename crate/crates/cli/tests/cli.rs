use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    p.to_str().unwrap().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn ggff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ggff")).args(args).env_remove("GGFF_SEED").output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn report_has_the_documented_shape() {
    let pt = data("pt.json");
    let out = ggff(&["verify-theorem1", "--network", &pt, "--samples", "2000", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "verify-theorem1");
    assert_eq!(r["seed"], 9);
    assert_eq!(r["inputs"]["samples"], 2000);
    assert_eq!(r["pass"], true);
    let v = &r["verdicts"][0];
    for key in ["name", "value", "target", "tolerance", "tolerance_kind", "provenance", "std_error", "pass"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["provenance"], "monte-carlo");
    assert_eq!(v["tolerance_kind"], "standard_errors");
}

#[test]
fn trivial_gauge_always_realizes_the_event() {
    let out = ggff(&["verify-theorem1", "--network", &data("pt_trivial.json"), "--samples", "3000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdicts"][0]["value"], 1.0);
    assert_eq!(r["verdicts"][0]["target"], 1.0);
}

#[test]
fn seed_comes_from_the_environment() {
    let pt = data("pt.json");
    let args = ["connectivity", "--network", pt.as_str(), "--samples", "3000"];
    let from_env = Command::new(env!("CARGO_BIN_EXE_ggff")).args(args).env("GGFF_SEED", "77").output().unwrap();
    let mut explicit_args = args.to_vec();
    explicit_args.extend(["--seed", "77"]);
    let explicit = ggff(&explicit_args);
    let other = ggff(&args);
    assert_eq!(report(&from_env)["seed"], 77);
    assert_eq!(report(&from_env)["results"], report(&explicit)["results"]);
    assert_ne!(report(&from_env)["results"], report(&other)["results"]);
}

#[test]
fn output_file_matches_stdout() {
    let dir = scratch("output");
    let path = dir.join("report.json");
    let pt = data("pt.json");
    let to_file = ggff(&["identities", "--network", &pt, "--output", path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    let written: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written, report(&ggff(&["identities", "--network", &pt])));
}

#[test]
fn identities_write_csv_matrices() {
    let dir = scratch("csv");
    let out = ggff(&["identities", "--network", &data("pt.json"), "--csv-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["results"]["det_ratio"].as_f64().unwrap() - (3.0f64 / 7.0).sqrt()).abs() < 1e-12);
    let text = fs::read_to_string(dir.join("twisted_green.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    // header plus one row per interior vertex
    assert_eq!(rows.len(), 4);
    assert!(rows[0].contains('x') && rows[0].contains('y') && rows[0].contains('z'));
    for name in ["laplacian.csv", "twisted_laplacian.csv", "green.csv"] {
        assert!(dir.join(name).exists(), "{name}");
    }
}

#[test]
fn invalid_network_fails_validation() {
    let dir = scratch("invalid");
    let path = dir.join("bad.json");
    fs::write(
        &path,
        r#"{"vertices": ["a", "b"], "boundary": [],
            "edges": [{"id": "ab", "u": "a", "v": "b", "conductance": -1.0}]}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let out = ggff(&["validate", "--network", p]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert!(!r["results"]["issues"].as_array().unwrap().is_empty());
    // other commands refuse to load it
    assert_eq!(ggff(&["identities", "--network", p]).status.code(), Some(2));
}

#[test]
fn missing_file_and_unknown_vertex_are_errors() {
    assert_eq!(ggff(&["validate", "--network", "/nonexistent/net.json"]).status.code(), Some(2));
    let out = ggff(&["connectivity", "--network", &data("pt.json"), "--pair", "x,q", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('q'));
}

#[test]
fn green_one_point_rate_fails_the_occupation_check() {
    let out = ggff(&["loopsoup-test", "--network", &data("pt.json"), "--samples", "4000", "--one-point-rate", "green"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let failing: Vec<&str> = r["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["pass"] == false)
        .map(|v| v["name"].as_str().unwrap())
        .collect();
    assert!(failing.iter().any(|n| n.starts_with("occupation_mean")), "{failing:?}");
}

#[test]
fn loop_dump_is_json_lines() {
    let dir = scratch("dump");
    let path = dir.join("loops.jsonl");
    let out = ggff(&[
        "loopsoup-test",
        "--network",
        &data("pt.json"),
        "--samples",
        "500",
        "--dump-loops",
        path.to_str().unwrap(),
        "--dump-soups",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let mut n = 0;
    for line in text.lines() {
        let l: Value = serde_json::from_str(line).unwrap();
        let skeleton = l["skeleton"].as_array().unwrap();
        assert_eq!(skeleton.len(), l["holding_times"].as_array().unwrap().len());
        assert!(l["soup"].as_u64().unwrap() < 50);
        let h = l["holonomy"].as_i64().unwrap();
        assert!(h == 1 || h == -1);
        n += 1;
    }
    assert!(n > 0);
}

#[test]
fn gauge_comparison() {
    let pt = data("pt.json");
    let trivial = data("pt_trivial.json");
    let same = report(&ggff(&["gauge", "--network", &pt, "--other", &pt]));
    assert_eq!(same["results"]["equivalent"], true);
    assert_eq!(same["results"]["trivial"], false);
    assert_eq!(same["results"]["cover_connected"], true);
    let out = ggff(&["gauge", "--network", &pt, "--other", &trivial]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"]["equivalent"], false);
    let t = report(&ggff(&["gauge", "--network", &trivial]));
    assert_eq!(t["results"]["trivial"], true);
    assert_eq!(t["results"]["cover_connected"], false);
}

#[test]
fn metric_grid_reports_middle_limits() {
    let out = ggff(&["metric-grid", "--network", &data("pt.json"), "--cells", "5", "--samples", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let grids = r["results"]["grids"].as_array().unwrap();
    assert_eq!(grids.len(), 2);
    assert_eq!(r["pass"], true);
}

use std::path::Path;

use randmean_cli::{run, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use serde_json::Value;

const DIRICHLET: &str = r#"{"variant":"dirichlet","base":{"atoms":[[0,1],[1,1]]}}"#;

fn cli(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["randmean".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out-dir".into());
    argv.push(out.to_string_lossy().into_owned());
    run(argv)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn metadata_without_timings(dir: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&read(&dir.join("metadata.json"))).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v
}

fn rows(dir: &Path) -> Vec<Vec<f64>> {
    read(&dir.join("results.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn uniform_prior_cdf() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let code = cli(&["prior-cdf", "--model", DIRICHLET, "--g", "indicator:0.5:1.5", "--grid", "0:1:11"], &out);
    assert_eq!(code, EXIT_OK);
    assert!(read(&out.join("results.csv")).starts_with("sigma,value,err\n"));
    let rows = rows(&out);
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!((r[1] - r[0]).abs() < 1e-8, "{r:?}");
    }
    assert!(out.join("plot.py").exists());
}

#[test]
fn malformed_json_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    assert_eq!(cli(&["prior-cdf", "--model", "{bad", "--g", "identity", "--grid", "0:1:3"], &out), EXIT_CONFIG);
    assert!(!out.exists());
    let unknown = r#"{"variant":"nope","base":{"atoms":[[0,1]]}}"#;
    assert_eq!(cli(&["prior-cdf", "--model", unknown, "--g", "identity", "--grid", "0:1:3"], &out), EXIT_CONFIG);
    assert_eq!(cli(&["prior-cdf", "--model", DIRICHLET, "--g", "identity", "--grid", "1:0:3"], &out), EXIT_CONFIG);
    assert_eq!(cli(&["prior-cdf", "--bogus-flag"], &out), EXIT_CONFIG);
    assert_eq!(cli(&["prior-cdf", "--model", DIRICHLET, "--g", "identity"], &out), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["simulate", "--model", DIRICHLET, "--g", "identity", "--n", "200", "--seed", "7", "--eps", "1e-6"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(cli(&args, &a), EXIT_OK);
    assert_eq!(cli(&args, &b), EXIT_OK);
    assert_eq!(read(&a.join("results.csv")), read(&b.join("results.csv")));
    assert_eq!(metadata_without_timings(&a), metadata_without_timings(&b));
}

#[test]
fn metadata_replays_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let gg = r#"{"variant":"generalized_gamma","gamma":0.5,"beta":1,"p0":{"atoms":[[0,0.3],[0.5,0.3],[1,0.4]]}}"#;
    assert_eq!(cli(&["prior-density", "--model", gg, "--g", "identity", "--grid", "0.05:0.95:7"], &first), EXIT_OK);
    let replay = tmp.path().join("replay");
    let meta = first.join("metadata.json");
    assert_eq!(cli(&["--config", meta.to_str().unwrap()], &replay), EXIT_OK);
    assert_eq!(read(&first.join("results.csv")), read(&replay.join("results.csv")));
    assert_eq!(metadata_without_timings(&first), metadata_without_timings(&replay));
}

#[test]
fn validate_reports_and_signals_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = tmp.path().join("ok");
    assert_eq!(cli(&["validate", "--suite", "dirichlet"], &ok), EXIT_OK);
    let report: Value = serde_json::from_str(&read(&ok.join("report.json"))).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["suites"][0]["checks"].as_array().unwrap().len(), 2);
    // 20 replicates cannot meet the threshold; the report is still written
    let bad = tmp.path().join("bad");
    assert_eq!(cli(&["validate", "--suite", "dirichlet", "--n", "20"], &bad), EXIT_NUMERICAL);
    let report: Value = serde_json::from_str(&read(&bad.join("report.json"))).unwrap();
    assert_eq!(report["pass"], Value::Bool(false));
    assert_eq!(cli(&["validate", "--suite", "nope"], &tmp.path().join("x")), EXIT_CONFIG);
}

#[test]
fn pd_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cdf");
    let p0 = r#"{"atoms":[[0,0.5],[1,0.5]]}"#;
    let args = ["pd-cdf", "--gamma", "0.5", "--theta", "1", "--p0", p0, "--g", "identity", "--grid", "0:1:5"];
    assert_eq!(cli(&args, &out), EXIT_OK);
    let r = rows(&out);
    assert!((r[2][1] - 0.5).abs() < 1e-7, "{r:?}");
    let fdd = tmp.path().join("fdd");
    assert_eq!(cli(&["pd-fdd", "--theta", "1", "--p", "0.5,0.5", "--eval", "0.3"], &fdd), EXIT_OK);
    let v: Value = serde_json::from_str(&read(&fdd.join("fdd.json"))).unwrap();
    assert!(v["density"].as_f64().unwrap() > 0.0);
    let pred = tmp.path().join("pred");
    assert_eq!(cli(&["predictive", "--gamma", "0.5", "--sample", r#"{"observations":[1,1,2]}"#], &pred), EXIT_OK);
    let v: Value = serde_json::from_str(&read(&pred.join("predictive.json"))).unwrap();
    assert!((v["new_mass"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(cli(&["pd-cdf", "--gamma", "1.5", "--theta", "1", "--p0", p0, "--g", "identity", "--grid", "0:1:5"], &tmp.path().join("e")), EXIT_CONFIG);
}

#[test]
fn mixture_routes_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["mixture-cdf", "--model", DIRICHLET, "--g", "identity", "--data", r#"{"y":[0.1,0.9]}"#, "--kernel", "gaussian:1", "--grid", "0.2:0.8:4"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(cli(&base, &a), EXIT_OK);
    let mut with_route = base.to_vec();
    with_route.extend(["--route", "general"]);
    assert_eq!(cli(&with_route, &b), EXIT_OK);
    for (x, y) in rows(&a).iter().zip(rows(&b)) {
        assert!((x[1] - y[1]).abs() < 1e-6, "{x:?} {y:?}");
    }
}

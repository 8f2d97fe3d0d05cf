use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-dpp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_without_runtime(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("runtime_seconds");
    v
}

#[test]
fn weyl_counts() {
    let out = run(&["weyl", "--manifold", "sphere2", "--lambdas", "10,20,40"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,count,leading,ratio,residual,pointwise_residual");
    let counts: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, ["100", "400", "1600"]);
    assert_eq!(lines[1].split(',').next().unwrap().parse::<f64>().unwrap(), 10.0);
}

#[test]
fn single_point_sample() {
    let out = run(&[
        "sample",
        "--manifold",
        "circle",
        "--lambda",
        "0",
        "--replicas",
        "1",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "replica,index,space,c1");
    assert!(lines[1].starts_with("0,0,manifold,"));
}

#[test]
fn gap_defaults_quadrature_order() {
    let out = run(&["gap", "--manifold", "circle", "--lambda", "3.5", "--arc", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in ["command", "config", "results", "errors_se", "slopes", "runtime_seconds"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["config"]["quad_order"], 64);
    assert!(v["results"]["self_convergence"].as_f64().unwrap() < 1e-8);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["weyl", "--lambdas", "10"]).status.code(), Some(2));
    assert_eq!(
        run(&["weyl", "--manifold", "circle", "--lambdas", "3,2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["sample", "--manifold", "sphere2", "--lambda", "2", "--point", "1,1,1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["pcf", "--manifold", "circle", "--lambda", "10", "--replicas", "10"])
            .status
            .code(),
        Some(2),
        "too few replicas"
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn outputs_are_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let base = [
        "sample",
        "--manifold",
        "torus:2",
        "--lambda",
        "3",
        "--replicas",
        "40",
        "--seed",
        "21",
    ];
    for (csv, report, threads) in [
        ("a.csv", "a.json", "1"),
        ("b.csv", "b.json", "1"),
        ("c.csv", "c.json", "3"),
    ] {
        let mut args: Vec<&str> = base.to_vec();
        let csv = p(csv);
        let report = p(report);
        args.extend([
            "--out",
            csv.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(run(&args).status.code(), Some(0));
    }
    let a = fs::read(p("a.csv")).unwrap();
    assert_eq!(a, fs::read(p("b.csv")).unwrap());
    assert_eq!(a, fs::read(p("c.csv")).unwrap());
    let ra = json_without_runtime(&p("a.json"));
    let rb = json_without_runtime(&p("b.json"));
    assert_eq!(ra["results"], rb["results"]);
    assert_eq!(ra["config"]["seed"], 21);

    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 40 * 29);
}

#[test]
fn chart_samples_and_kernel_tables() {
    let out = run(&[
        "sample",
        "--manifold",
        "sphere2",
        "--lambda",
        "4",
        "--replicas",
        "3",
        "--chart",
        "--seed",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("replica,index,space,c1,c2\n"));
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("chart")));

    let out = run(&["kernel", "--manifold", "circle", "--lambda", "20", "--grid-points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "u1,v1,value");
    assert_eq!(lines.len(), 1 + 9);

    let out = run(&[
        "kernel",
        "--kind",
        "universal",
        "--dim",
        "2",
        "--grid-points",
        "2",
        "--grid-radius",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("u1,u2,v1,v2,value\n"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# convergence run\nmanifold = circle\nlambdas = 20,40,80\ngrid_points = 9\neps = 1.0\n",
    )
    .unwrap();
    let out = run(&["converge", "--config", cfg.to_str().unwrap(), "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["config"]["epsilon"], 0.5);
    assert_eq!(v["config"]["manifold"], "circle");
    assert_eq!(v["config"]["lambdas"], serde_json::json!([20.0, 40.0, 80.0]));
    assert_eq!(v["results"]["strictly_decreasing"], true);
    assert_eq!(v["slopes"].as_array().unwrap().len(), 1);
}

#[test]
fn statistical_commands_report_standard_errors() {
    let out = run(&[
        "pcf",
        "--manifold",
        "circle",
        "--lambda",
        "20",
        "--replicas",
        "1000",
        "--window",
        "4",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["results"]["bins"].as_array().unwrap().len(), 8);
    assert_eq!(v["errors_se"]["bins"].as_array().unwrap().len(), 8);
    assert!(v["errors_se"]["intensity"].as_f64().unwrap() > 0.0);

    let out = run(&[
        "laplace",
        "--manifold",
        "circle",
        "--lambda",
        "3.5",
        "--arc",
        "1",
        "--h",
        "bump",
        "--replicas",
        "4000",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["results"]["difference_in_se"].as_f64().unwrap() < 4.0);
    assert!(v["errors_se"]["monte_carlo"].as_f64().unwrap() > 0.0);
    assert_eq!(v["config"]["options"]["h"], "bump");
}

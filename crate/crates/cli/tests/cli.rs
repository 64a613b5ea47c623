use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bwmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwmin"))
        .args(args)
        .env_remove("BWMIN_THREADS")
        .output()
        .unwrap()
}

fn flows_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bwmin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn pair() -> PathBuf {
    flows_file(
        "pair.json",
        r#"{"flows":[{"r":1,"b":5,"d":1.4},{"r":4,"b":5,"d":1.25}]}"#,
    )
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn solve_static_priority_example() {
    let p = pair();
    let out = bwmin(&["solve", "--input", p.to_str().unwrap(), "--scheduler", "sp"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!((f(&v["r_min"]) - 78.0 / 7.0).abs() < 1e-9);

    let out = bwmin(&[
        "solve",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "sp-shaped",
    ]);
    let v = stdout_json(&out);
    assert!((f(&v["r_min"]) - 53.0 / 7.0).abs() < 1e-9);
    assert_eq!(v["b_prime"], serde_json::json!([5.0, 0.0]));
    assert_eq!(v["delays"].as_array().unwrap().len(), 2);
}

#[test]
fn outputs_follow_input_order() {
    let p = flows_file(
        "reversed.json",
        r#"{"flows":[{"r":4,"b":5,"d":1.25},{"r":1,"b":5,"d":1.4}]}"#,
    );
    let v = stdout_json(&bwmin(&[
        "solve",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "sp-shaped",
    ]));
    assert_eq!(v["b_prime"], serde_json::json!([0.0, 5.0]));
}

#[test]
fn edf_example_reports_exact_minimum() {
    let p = flows_file(
        "edf.json",
        r#"{"flows":[{"r":1,"b":45,"d":10},{"r":1,"b":5,"d":1}]}"#,
    );
    let v = stdout_json(&bwmin(&[
        "solve",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "edf",
    ]));
    assert!((f(&v["r_min"]) - 5.9).abs() < 1e-12);
    assert_eq!(v["delays"], serde_json::json!([10.0, 1.0]));
}

#[test]
fn compare_lists_all_minima() {
    let p = pair();
    let v = stdout_json(&bwmin(&["compare", "--input", p.to_str().unwrap()]));
    let m = &v["minima"];
    assert!((f(&m["edf"]) - 53.0 / 7.0).abs() < 1e-9);
    assert!((f(&m["sp"]) - 78.0 / 7.0).abs() < 1e-9);
    assert!((f(&m["sp-shaped"]) - 53.0 / 7.0).abs() < 1e-9);
    assert!((f(&m["fifo"]) - 8.0).abs() < 1e-9);
    assert!((f(&m["fifo-shaped"]) - 7.8125).abs() < 1e-9);
    assert_eq!(v["pairwise"].as_array().unwrap().len(), 10);
    assert!(f(&v["metrics"]["sp-shaped-vs-edf"]) >= 0.0);
}

#[test]
fn delay_at_given_bandwidth() {
    let p = pair();
    let out = bwmin(&[
        "delay",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "sp",
        "--r",
        "20",
    ]);
    let v = stdout_json(&out);
    let d = v["delays"].as_array().unwrap();
    assert!((f(&d[0]) - 10.0 / 16.0).abs() < 1e-12);
    assert!((f(&d[1]) - 5.0 / 20.0).abs() < 1e-12);

    let out = bwmin(&[
        "delay",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "sp-shaped",
        "--r",
        "20",
        "--b-prime",
        "5,9",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "InvalidPlan");
}

#[test]
fn solve_then_verify_round_trip() {
    let p = pair();
    for s in ["edf", "sp", "sp-shaped", "fifo", "fifo-shaped"] {
        let v = stdout_json(&bwmin(&[
            "solve",
            "--input",
            p.to_str().unwrap(),
            "--scheduler",
            s,
        ]));
        let r = v["r_min"].to_string();
        let out = bwmin(&[
            "verify",
            "--input",
            p.to_str().unwrap(),
            "--scheduler",
            s,
            "--r",
            &r,
            "--offsets",
            "3",
        ]);
        assert!(
            out.status.success(),
            "{s}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let rep = stdout_json(&out);
        assert_eq!(rep["sound"], true);
        let dt = f(&rep["dt"]);
        for flow in rep["flows"].as_array().unwrap() {
            assert!(f(&flow["margin"]) >= -2.0 * dt);
        }
    }
}

#[test]
fn verify_single_flow_fifo() {
    let p = flows_file("single.json", r#"{"flows":[{"r":1,"b":4,"d":2}]}"#);
    let v = stdout_json(&bwmin(&[
        "verify",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "fifo",
        "--r",
        "4",
    ]));
    let sim = f(&v["flows"][0]["simulated_max"]);
    assert!((sim - 1.0).abs() <= 2.0 * f(&v["dt"]));
}

#[test]
fn input_errors_exit_two() {
    let p = pair();
    let out = bwmin(&[
        "verify",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "sp",
        "--r",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "InsufficientBandwidth");

    let dup = flows_file(
        "dup.json",
        r#"{"flows":[{"r":1,"b":1,"d":1},{"r":1,"b":1,"d":1}]}"#,
    );
    let out = bwmin(&[
        "solve",
        "--input",
        dup.to_str().unwrap(),
        "--scheduler",
        "edf",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "EqualDeadlines");

    let out = bwmin(&[
        "solve",
        "--input",
        "/nonexistent/flows.json",
        "--scheduler",
        "edf",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = bwmin(&["solve", "--scheduler", "edf"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "Usage");
}

#[test]
fn packet_model() {
    let p = flows_file(
        "packet.json",
        r#"{"flows":[{"r":1,"b":5,"d":1.4,"l":1},{"r":4,"b":5,"d":1.25,"l":1}]}"#,
    );
    let out = bwmin(&[
        "solve",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "sp",
        "--model",
        "packet",
    ]);
    let v = stdout_json(&out);
    assert!((f(&v["r_min"]) - 78.0 / 7.0).abs() < 1e-9);
    let out = bwmin(&[
        "solve",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "sp-shaped",
        "--model",
        "packet",
    ]);
    let v = stdout_json(&out);
    assert!(f(&v["r_min"]) <= 78.0 / 7.0);
    assert!(v["case"].is_string());

    let three = flows_file(
        "three.json",
        r#"{"flows":[{"r":1,"b":5,"d":3},{"r":1,"b":5,"d":2},{"r":1,"b":5,"d":1}]}"#,
    );
    let out = bwmin(&[
        "solve",
        "--input",
        three.to_str().unwrap(),
        "--scheduler",
        "sp",
        "--model",
        "packet",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = bwmin(&[
        "solve",
        "--input",
        p.to_str().unwrap(),
        "--scheduler",
        "fifo",
        "--model",
        "packet",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluation_commands_write_csv() {
    let a = bwmin(&[
        "evaluate",
        "--scenario",
        "d11",
        "--trials",
        "5",
        "--seed",
        "3",
    ]);
    let b = bwmin(&[
        "--sequential",
        "evaluate",
        "--scenario",
        "d11",
        "--trials",
        "5",
        "--seed",
        "3",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("metric,scenario,mean,std,ci_lo,ci_hi,trials\n"));
    assert_eq!(text.lines().count(), 6);

    let out_path = flows_file("cdf.csv", "");
    let out = bwmin(&[
        "cdf",
        "--scenario",
        "d21",
        "--trials",
        "4",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cdf = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(cdf.lines().count(), 5);

    let custom = flows_file(
        "scenario.json",
        r#"{"name":"mine","deadlines":[1,0.5,0.25]}"#,
    );
    let out = bwmin(&[
        "evaluate",
        "--scenario",
        custom.to_str().unwrap(),
        "--trials",
        "3",
    ]);
    assert!(String::from_utf8(out.stdout).unwrap().contains(",mine,"));

    let out = bwmin(&["heatmap", "--metric", "fifo-reshaping-gain", "--grid", "10"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 11);

    let out = bwmin(&["evaluate", "--scenario", "nope", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_bwmin"))
            .args(["heatmap", "--metric", "sp-reshaping-gain", "--grid", "4"])
            .env("BWMIN_THREADS", v)
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    let bad = run("zero");
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(stderr_json(&bad)["error"], "InvalidConfig");
}

//! The command-line contract: outputs, exit codes, determinism.

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdcorput"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn seq_csv() {
    let o = run(&["seq", "--base", "2", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "n,num,den\n0,0,1\n1,1,2\n2,1,4\n3,3,4\n");
    let o = run(&["seq", "--n", "1"]);
    assert_eq!(stdout(&o), "n,num,den\n0,0,1\n");
}

#[test]
fn seq_json() {
    let o = run(&["seq", "--base", "3", "--n", "3", "--format", "json"]);
    let v = json(&o);
    assert_eq!(v[1]["x"].as_f64().unwrap(), 0.333333333333333);
}

#[test]
fn bad_base_exits_2() {
    let o = run(&["seq", "--base", "1", "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("base must be >= 2"));
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn s_example() {
    let o = run(&["s", "--base", "2", "--n", "4"]);
    assert_eq!(stdout(&o), "{\"N\":4,\"S\":\"1/2\"}\n");
    let o = run(&["s", "--base", "10", "--n", "18446744073709551615"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn moments_example() {
    let o = run(&["moments", "--base", "2", "--m", "1", "--order", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["variance"], "1/16");
    let o = run(&["moments", "--base", "2", "--m", "2", "--order", "4"]);
    assert_eq!(json(&o)["variance"], "19/256");
    let o = run(&["moments", "--base", "10", "--m", "7"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["moments", "--base", "2", "--m", "2", "--order", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tail_example() {
    let o = run(&["tail", "--base", "2", "--m-exp", "20", "--lambda", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let keys = ["\"M\"", "\"base\"", "\"lambda\"", "\"threshold\"", "\"empirical_fraction\"", "\"bound\"", "\"satisfied\""];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "key order: {text}");
    let v = json(&o);
    assert_eq!(v["satisfied"], true);
    assert_eq!(v["empirical_fraction"], 0.0);
    assert_eq!(v["M"], 1u64 << 20);
    let o = run(&["tail", "--m-exp", "10", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn clt_csv_schema() {
    let o = run(&["clt", "--m-exp", "12", "--grid", "-1:1:0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,empirical,phi,abs_diff"));
    assert_eq!(lines.count(), 5);
    let o = run(&["clt", "--m", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lp_and_expsum_and_qmc() {
    let v = json(&run(&["lp", "--n", "1", "--p", "2"]));
    assert!((v["value"].as_f64().unwrap() - 0.577350269189626).abs() < 1e-15);
    assert_eq!(v["integral"], "1/3");
    let v = json(&run(&["lp", "--n", "2", "--p", "inf"]));
    assert_eq!(v["value"], 1.0);
    let o = run(&["lp", "--n", "5", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));

    let v = json(&run(&["expsum", "--ell", "2", "--n", "3"]));
    assert_eq!(v["s_min"], 2);
    assert_eq!(v["satisfied"], true);
    assert_eq!(run(&["expsum", "--ell", "0", "--n", "3"]).status.code(), Some(2));

    let v = json(&run(&["qmc", "--f", "poly:0,0,1", "--n", "4"]));
    assert_eq!(v["remainder_exact"], "1/24");
    assert_eq!(v["satisfied"], true);
    assert_eq!(run(&["qmc", "--f", "gauss:1", "--n", "4"]).status.code(), Some(2));
}

#[test]
fn fourier_and_moment_check() {
    let o = run(&["fourier", "--trials", "10", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(o.stdout, run(&["fourier", "--trials", "10", "--seed", "3"]).stdout);
    assert_eq!(json(&o).as_array().unwrap().len(), 10);
    let v = json(&run(&["prop8-check", "--base", "2", "--m", "4", "--k", "2"]));
    assert_eq!(v["satisfied"], true);
    assert_eq!(v["identity"], true);
}

#[test]
fn lp_tail_reports() {
    let o = run(&["lp-tail", "--m", "3000", "--lambda", "1", "--a", "1000000"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["empirical_fraction"], 0.0);
}

#[test]
fn scan_thread_invariance_and_out() {
    let one = run(&["scan", "--base", "3", "--m", "200000", "--threads", "1"]);
    let four = run(&["scan", "--base", "3", "--m", "200000", "--threads", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    assert!(text.starts_with("N,S,normalized\n0,0/1,\n1,1/2,\n2,2/3,"));
    let dir = std::env::temp_dir().join(format!("vdc-out-{}", std::process::id()));
    let o = run(&["scan", "--base", "3", "--m", "200", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&dir).unwrap().starts_with("N,S,normalized\n"));
    std::fs::remove_file(dir).unwrap();
}

#[test]
fn caps_exit_4() {
    let o = run(&["scan", "--m-exp", "27"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["seq", "--n", "100000000"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn help_exits_0() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for sub in ["seq", "s", "scan", "lp", "clt", "tail", "lp-tail", "expsum", "fourier", "qmc", "moments", "prop8-check"] {
        assert!(text.contains(&format!("  {sub} ")), "{sub} missing from help");
        assert_eq!(run(&[sub, "--help"]).status.code(), Some(0));
    }
    assert_eq!(run(&["nosuch"]).status.code(), Some(2));
}

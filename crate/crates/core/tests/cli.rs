use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TABLE1: [&str; 10] = [
    "--lambda", "0.3", "--mu", "0.5", "--nu", "0.8", "--N", "500", "--M", "30",
];

fn fbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbp"))
        .args(args)
        .output()
        .expect("spawn fbp")
}

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    fbp(&refs)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_is_reproducible() {
    let mut args = with(&["simulate"], &TABLE1);
    args.extend(["--horizon", "3", "--paths", "4", "--seed", "9"].map(String::from));
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);
    assert!(
        a.starts_with("path_id,time,population"),
        "{}",
        &a[..40.min(a.len())]
    );
}

#[test]
fn simulate_rejects_zero_paths() {
    let mut args = with(&["simulate"], &TABLE1);
    args.extend(["--horizon", "1", "--paths", "0"].map(String::from));
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn moments_at_time_zero_are_the_initial_state() {
    let mut args = with(&["moments"], &TABLE1);
    args.extend(["--t-grid", "0"].map(String::from));
    let rows = csv_rows(&stdout(&run(&args)));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], 30.0);
    assert_eq!(rows[0][2], 0.0);
}

#[test]
fn unit_order_moments_reach_equilibrium() {
    let o = fbp(&[
        "moments",
        "--lambda",
        "0.3",
        "--mu",
        "0.5",
        "--nu",
        "1",
        "--N",
        "500",
        "--M",
        "30",
        "--t-grid",
        "log:1:1e5:6",
    ]);
    let rows = csv_rows(&stdout(&o));
    let last = rows.last().unwrap();
    assert!((last[1] - 500.0 * 0.375).abs() < 1e-4, "{last:?}");
}

#[test]
fn moments_write_a_covariance_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let mut args = with(&["moments"], &TABLE1);
    args.extend(["--t-grid", "1,10,100", "--s", "1,5", "--out"].map(String::from));
    args.push(out.to_str().unwrap().into());
    stdout(&run(&args));
    let cov = fs::read_to_string(dir.path().join("m.cov.csv")).unwrap();
    let header = cov.lines().next().unwrap();
    assert!(header.starts_with("s,t,covariance,correlation"), "{header}");
    // (1,1) (1,10) (1,100) (5,10) (5,100)
    assert_eq!(cov.lines().count(), 6);
    assert!(dir.path().join("m.csv.config.toml").exists());
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn estimate_recovers_exact_moments() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    let t = 1.5;
    let m = fbp::moments::Moments::new(&fbp::ProcessParams::new(0.3, 0.5, 0.8, 500, 30).unwrap())
        .unwrap();
    let (m1, m2) = m.raw_moments(t).unwrap();
    write(
        &input,
        &format!("m1,m2,sample_size,observation_time\n{m1:.17e},{m2:.17e},500,{t}\n"),
    );
    let o = fbp(&[
        "estimate",
        "--mu",
        "0.5",
        "--N",
        "500",
        "--M",
        "30",
        "--input",
        input.to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(
        (v["lambda_hat"].as_f64().unwrap() - 0.3).abs() < 1e-6,
        "{v}"
    );
    assert!((v["nu_hat"].as_f64().unwrap() - 0.8).abs() < 1e-6, "{v}");
    assert_eq!(v["converged"], Value::Bool(true));
}

#[test]
fn estimate_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    write(&input, "count\n12\nabc\n");
    let o = fbp(&[
        "estimate",
        "--mu",
        "0.5",
        "--N",
        "500",
        "--M",
        "30",
        "--T",
        "1",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv:3"));
}

#[test]
fn estimate_reports_failure_to_converge() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    write(
        &input,
        "m1,m2,sample_size,observation_time\n150,23000,500,1.5\n",
    );
    let o = fbp(&[
        "estimate",
        "--mu",
        "0.5",
        "--N",
        "500",
        "--M",
        "30",
        "--lambda-min",
        "2",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["converged"], Value::Bool(false));
}

#[test]
fn study_output_does_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("s{threads}.json"));
        let mut args = with(&["study"], &TABLE1);
        args.extend(
            [
                "--J",
                "200",
                "--K",
                "6",
                "--seed",
                "11",
                "--threads",
                threads,
                "--out",
            ]
            .map(String::from),
        );
        args.push(out.to_str().unwrap().into());
        stdout(&run(&args));
        let json = fs::read(&out).unwrap();
        let reps = fs::read(dir.path().join(format!("s{threads}.replicates.csv"))).unwrap();
        outputs.push((json, reps));
    }
    assert_eq!(outputs[0], outputs[1]);
    let v: Value = serde_json::from_slice(&outputs[0].0).unwrap();
    assert_eq!(v["K"], 6);
}

#[test]
fn lrd_classifies_both_modes() {
    for (mode, class) in [("fbp", "LRD"), ("fbn", "SRD")] {
        let mut args = with(&["lrd"], &TABLE1);
        args.extend(["--mode", mode].map(String::from));
        let v: Value = serde_json::from_str(&stdout(&run(&args))).unwrap();
        assert_eq!(v["classification"], class, "{v}");
    }
}

#[test]
fn lrd_rejects_grids_inside_the_transient() {
    let mut args = with(&["lrd"], &TABLE1);
    args.extend(["--t-grid", "2,100,1000"].map(String::from));
    assert_eq!(run(&args).status.code(), Some(1));
}

#[test]
fn lrd_fits_supplied_points() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.csv");
    let body: String = [10.0f64, 100.0, 1000.0, 1e4]
        .iter()
        .map(|t| format!("{t},{}\n", 2.0 * t.powf(-0.35)))
        .collect();
    write(&pts, &format!("t,value\n{body}"));
    let v: Value =
        serde_json::from_str(&stdout(&fbp(&["lrd", "--points", pts.to_str().unwrap()]))).unwrap();
    assert!((v["exponent"].as_f64().unwrap() - 0.35).abs() < 1e-12);
    assert_eq!(v["classification"], "LRD");
}

#[test]
fn config_sidecar_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let mut args = with(&["moments"], &TABLE1);
    args.extend(["--t-grid", "lin:0:4:5", "--out"].map(String::from));
    args.push(first.to_str().unwrap().into());
    stdout(&run(&args));
    let cfg = dir.path().join("a.csv.config.toml");
    let second = dir.path().join("b.csv");
    stdout(&fbp(&[
        "moments",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn flags_override_config_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(
        &cfg,
        "lambda = 0.3\nmu = 0.5\nnu = 0.8\nN = 500\nM = 30\nt-grid = \"0\"\n",
    );
    let a = stdout(&fbp(&[
        "moments",
        "--config",
        cfg.to_str().unwrap(),
        "--M",
        "40",
    ]));
    assert_eq!(csv_rows(&a)[0][1], 40.0);
    write(&cfg, "lambda = 0.3\nbogus = 1\n");
    let o = fbp(&[
        "moments",
        "--config",
        cfg.to_str().unwrap(),
        "--t-grid",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(fbp(&["moments", "--bogus"]).status.code(), Some(1));
}

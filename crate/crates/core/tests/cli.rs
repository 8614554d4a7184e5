use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const PASSING: &str = r#"{
    "jump": {"family": "exponential", "rate": 1.0},
    "kernel": {"family": "moderate", "rho": 1.0, "t_min": 1.0},
    "t": "e^7",
    "u_grid": [0.0, 0.5, 1.0],
    "alphas": [1.0, -1.0, 0.0],
    "replications": 2000,
    "master_seed": 5,
    "workers": 2
}"#;

fn shotnoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shotnoise"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn verify_with_passing_gates_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, PASSING);
    let out = dir.path().join("out");
    let o = shotnoise(&["verify", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert_eq!(r["pass"], true);
    assert_eq!(r["experiment"]["covariance"].as_array().unwrap().len(), 3);
    assert!(out.join("variance_ratios.csv").exists());
    assert!(out.join("karamata.csv").exists());

    let summary = shotnoise(&["report", "--out", s(&out)]);
    assert_eq!(summary.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&summary.stdout).contains("all gates passed"));
}

#[test]
fn verify_with_failed_gate_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = PASSING.replace(
        "\"workers\": 2",
        "\"workers\": 2, \"gates\": {\"max_covariance_deviation\": 0.01}",
    );
    let cfg = write_config(&dir, &text);
    let out = dir.path().join("out");
    let o = shotnoise(&["verify", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    let failed: Vec<&str> = r["failed"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failed.contains(&"covariance_max_abs_deviation"), "{failed:?}");
}

#[test]
fn validation_errors_exit_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, &PASSING.replace("[0.0, 0.5, 1.0]", "[0.5, 0.2]"));
    let o = shotnoise(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("u_grid not increasing"));

    let cfg = write_config(&dir, &PASSING.replace("\"e^7\"", "0.5"));
    let o = shotnoise(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`t`"));
}

#[test]
fn parse_and_io_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "{\n  \"jump\": {\"family\": \"exponential\", \"rate\": 1.0},\n  oops\n}");
    let o = shotnoise(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config.json:3:"));

    let missing = dir.path().join("nope.json");
    let o = shotnoise(&["verify", "--config", s(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));

    let o = shotnoise(&["report", "--out", s(&dir.path().join("empty"))]);
    assert_eq!(o.status.code(), Some(1));

    let o = shotnoise(&["simulate", "--config", s(&cfg), "--scaling", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn point_mass_simulation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = PASSING.replace(r#"{"family": "exponential", "rate": 1.0}"#, r#"{"family": "point_mass", "d": 1.0}"#);
    let cfg = write_config(&dir, &text);
    let o = shotnoise(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_carry_schema_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, PASSING);
    let out = dir.path().join("out");
    for sub in ["simulate", "limit-sample", "kernel-probe"] {
        let o = shotnoise(&[sub, "--config", s(&cfg), "--out", s(&out), "--replications", "10"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
    let samples = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    let mut lines = samples.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# shotnoise samples csv v1 config_hash="));
    assert_eq!(lines.next(), Some("replication_index,u,Z"));
    assert_eq!(samples.lines().count(), 2 + 10 * 3);
    let hash = header.rsplit('=').next().unwrap();
    assert_eq!(hash.len(), 64);

    let cov: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("limit_covariance.json")).unwrap()).unwrap();
    assert_eq!(cov["config_hash"], hash);
    assert_eq!(cov["covariance"][0][2], 0.0);

    let probe = std::fs::read_to_string(out.join("kernel_probe.csv")).unwrap();
    assert!(probe.contains(&format!("config_hash={hash}")));
    assert_eq!(probe.lines().nth(1), Some("t,h,H,m,g_u=0,g_u=0.5,g_u=1"));
    assert_eq!(probe.lines().count(), 2 + 64);

    // a different seed gives a different hash
    let other = dir.path().join("other");
    shotnoise(&["simulate", "--config", s(&cfg), "--out", s(&other), "--replications", "10", "--seed", "6"]);
    let other_samples = std::fs::read_to_string(other.join("samples.csv")).unwrap();
    assert!(!other_samples.contains(hash));
}

#[test]
fn closed_form_scaling_flag_reaches_the_probe() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, PASSING);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    shotnoise(&["kernel-probe", "--config", s(&cfg), "--out", s(&a)]);
    shotnoise(&["kernel-probe", "--config", s(&cfg), "--out", s(&b), "--scaling", "remark3"]);
    let last = |d: &Path| {
        let text = std::fs::read_to_string(d.join("kernel_probe.csv")).unwrap();
        let row: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        row
    };
    let (ra, rb) = (last(&a), last(&b));
    let t = ra[0];
    // g(t, 0.5): e^{u m(t) - 1} against t^u
    assert!((ra[5] - (0.5 * (1.0 + t.ln()) - 1.0).exp()).abs() < 1e-9 * ra[5]);
    assert!((rb[5] - t.sqrt()).abs() < 1e-9 * rb[5]);
}

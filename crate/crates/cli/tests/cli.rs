use std::path::Path;
use std::process::{Command, Output};

fn nls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn single(out: &Path) -> String {
    format!(
        r#"kind = "single"
output_dir = "{}"

[model]
dim = 1
alpha = 2.0
kappa = [0.0, 0.0]

[grid]
box_length = 40.0
points = 256

[solver]
dt = 0.01
t_end = 0.2

[initial]
kind = "gaussian"
amplitude = [1.0, 0.0]
width = 1.0
"#,
        out.display()
    )
}

#[test]
fn version_flag() {
    let o = nls(&["--version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn exponents_json_for_three_dimensions() {
    let o = nls(&["exponents", "--dim", "3", "--alpha", "1", "--a", "12", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rho"], 2.25);
    assert_eq!(v["gamma"], 12.0);
    assert_eq!(v["flags"]["h_in_Lmu"], true);
    let o = nls(&["exponents", "--dim", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["energy_critical"], "inf");
}

#[test]
fn exponents_bad_input_is_config_error() {
    assert_eq!(nls(&["exponents", "--dim", "3", "--alpha", "1", "--a", "1"]).status.code(), Some(1));
    assert_eq!(nls(&["exponents", "--dim", "0"]).status.code(), Some(1));
}

#[test]
fn oracle_blowup_time_and_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("z.csv");
    let o = nls(&[
        "oracle", "--dim", "2", "--alpha", "1", "--kappa-re", "0", "--kappa-im", "-1", "--z0", "1", "--trace",
        trace.to_str().unwrap(), "--samples", "5",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let t = v["blowup_time"].as_f64().unwrap();
    assert!((t - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    let csv = std::fs::read_to_string(trace).unwrap();
    assert_eq!(csv.lines().next(), Some("t,abs_z,arg_z"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn simulate_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = write_config(tmp.path(), &single(&out));
    let o = nls(&["simulate", "--config", cfg.to_str().unwrap(), "--gnuplot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["outcome"]["status"], "ReachedTEnd");
    assert!(summary["scalars"]["mass_drift"].as_f64().unwrap() < 1e-10);
    assert_eq!(summary["config"]["solver"]["safety"], 0.5);
    assert!(out.join("trace.gp").exists());
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = write_config(tmp.path(), &single(&out).replace("t_end = 0.2", "t_end = 0.2\ntypo = 1"));
    let o = nls(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo"));
    let cfg = write_config(tmp.path(), &single(&out));
    assert_eq!(nls(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(nls(&["simulate", "--config", "/nonexistent.toml"]).status.code(), Some(1));
}

#[test]
fn run_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg = write_config(tmp.path(), &single(&blocker.join("sub")));
    assert_eq!(nls(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn accept_filter() {
    let o = nls(&["accept", "--filter", "exponent-table"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS  1"));
    assert_eq!(nls(&["accept", "--filter", "no-such-criterion"]).status.code(), Some(1));
}

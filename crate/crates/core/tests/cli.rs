use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use asyncsa::harness::plot::parse_plot_data;
use asyncsa::sa::RunTrace;
use serde_json::Value;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn asyncsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asyncsa")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const QUADRATIC: &str = r#"
seed = 3
horizon = 50

[objective]
kind = "random-quadratic"
dimension = 2

[step_size]
kind = "harmonic"
c = 10.0

[delay]
kind = "stale-refresh"
p_c = 0.4

[error]
kind = "componentwise-uniform"
epsilon = 0.5
"#;

#[test]
fn run_writes_horizon_plus_one_rows_with_a_reproducible_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", QUADRATIC);
    let out_dir = dir.path().join("out");
    let out = asyncsa(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["rows"], 51);

    let trace = RunTrace::load(&out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.len(), 51);
    assert_eq!(trace.meta.seed, 3);
    assert_eq!(trace.meta.config["horizon"], 50);
    assert_eq!(trace.meta.config["delay"]["kind"], "stale-refresh");

    let again = dir.path().join("again");
    asyncsa(&["run", "--config", &cfg, "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(out_dir.join("trace.csv")).unwrap(), fs::read(again.join("trace.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", QUADRATIC);
    let out = asyncsa(&["run", "--config", &cfg, "--seed", "99", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(RunTrace::load(&dir.path().join("trace.csv")).unwrap().meta.seed, 99);
}

#[test]
fn jsonl_trace_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("t.jsonl");
    let text = format!("{QUADRATIC}\n[output]\ntrace = {:?}\n", trace_path.to_str().unwrap());
    let cfg = write_config(dir.path(), "run.toml", &text);
    let out = asyncsa(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let first = fs::read_to_string(&trace_path).unwrap().lines().next().unwrap().to_string();
    assert!(first.starts_with("{\"meta\""));
    assert_eq!(RunTrace::load(&trace_path).unwrap().len(), 51);
}

#[test]
fn errors_are_json_on_stderr_with_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();

    let bad = write_config(dir.path(), "bad.toml", &format!("{QUADRATIC}\nbogus = 1\n"));
    let out = asyncsa(&["run", "--config", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "config");

    let missing = dir.path().join("nope.toml");
    let out = asyncsa(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["exit_code"], 4);

    let out = asyncsa(&["run"]);
    assert_eq!(out.status.code(), Some(2));

    let expansive = r#"
seed = 1
horizon = 5000

[objective]
kind = "scaled-identity"
dimension = 2
scale = 50.0

[step_size]
kind = "constant"
a0 = 1.0
"#;
    let cfg = write_config(dir.path(), "blowup.toml", expansive);
    let out = asyncsa(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["error"], "divergence");
    assert!(RunTrace::load(&dir.path().join("trace.csv")).unwrap().len() > 1);
}

#[test]
fn a2vi_report_for_a_noiseless_fixture_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
seed = 2
horizon = 3000

[objective]
kind = "bellman"
fixture = "{FIXTURES}/mdp5.txt"

[step_size]
kind = "constant"
a0 = 1.0
"#
    );
    let cfg = write_config(dir.path(), "a2vi.toml", &text);
    let out = asyncsa(&["a2vi", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a2vi_report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["verdict"], "pass");
    assert!(report["report"]["distance_to_fixed_point"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["config"]["seed"], 2);
}

#[test]
fn a2pg_failing_verdict_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
seed = 2
horizon = 3
initial = [5.0, 5.0]

[objective]
kind = "quadratic-bowl"
dimension = 2

[step_size]
kind = "harmonic"
c = 10.0
"#;
    let cfg = write_config(dir.path(), "a2pg.toml", text);
    let out = asyncsa(&["a2pg", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["report"]["verdict"], "fail");
}

#[test]
fn check_reports_every_assumption_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &QUADRATIC.replace("horizon = 50", "horizon = 2000"));
    let out = asyncsa(&["check", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("check_report.json")).unwrap()).unwrap();
    for key in ["step_size", "activation", "delays", "config", "verdict"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }

    let slow = QUADRATIC.replace("kind = \"harmonic\"\nc = 10.0", "kind = \"power\"\np = 0.4\nc = 10.0");
    let cfg = write_config(dir.path(), "slow.toml", &slow.replace("horizon = 50", "horizon = 2000"));
    let out = asyncsa(&["check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
seeds = [1, 2]

[base]
horizon = 100

[base.objective]
kind = "random-quadratic"
dimension = 2

[base.step_size]
kind = "harmonic"
c = 10.0

[[parameters]]
path = "step_size.c"
values = [5.0, 10.0, 20.0]
"#;
    let cfg = write_config(dir.path(), "sweep.toml", text);
    let out = asyncsa(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "cell,seed,step_size.c,status,final_norm,final_residual,value");
    assert_eq!(lines.len(), 7);
}

#[test]
fn reproduce_fig_writes_table_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = asyncsa(&["reproduce-fig", "2", "--runs", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert!(table.lines().any(|l| l == "run_id,epsilon,error_norm,log_final_norm,p_c,seed"));
    let points = parse_plot_data(fs::File::open(dir.path().join("fig2_plot.csv")).map(std::io::BufReader::new).unwrap())
        .unwrap();
    assert_eq!(points.len(), 2 * 29);

    let out = asyncsa(&["reproduce-fig", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

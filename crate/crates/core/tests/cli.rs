use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stein_verify::report::{from_json, CSV_HEADER};
use tempfile::TempDir;

const GAUSSIAN: &str = r#"
experiment = "gaussian-concentration"
k = 2
n = 1
family = "gaussian"
samples = 20000
seed = 42
eps = [0.0, 0.1, 0.3]
eps2 = [0.1]

[[set]]
kind = "halfspace"
normal = [1.0, 1.0]
offset = 0.2

[[set]]
kind = "ball"
radius = 1.5
"#;

const RESIDUAL: &str = r#"
experiment = "stein-residual"
k = 1
n = 1
family = "gaussian"
samples = 10000
seed = 3
eps = [0.5]
points = [[0.3]]

[[set]]
kind = "halfspace"
normal = [1.0]
offset = 0.0
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stein-verify"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(sub: &str, config: &Path, extra: &[&str]) -> Output {
    bin().arg(sub).arg("--config").arg(config).args(extra).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn version_flag() {
    let o = bin().arg("--version").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains(env!("CARGO_PKG_VERSION")), "{text}");
}

#[test]
fn csv_output_has_frozen_header_and_one_row_per_radius() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.toml", GAUSSIAN);
    let o = run("gaussian-concentration", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    let first_set: Vec<&&str> = rows.iter().filter(|r| r.contains(",halfspace0,")).collect();
    assert_eq!(first_set.len(), 3);
    for r in &rows {
        let fields: Vec<&str> = r.split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.len());
        assert_eq!(fields[0], "gaussian-concentration");
        assert_eq!(fields[12], "pass");
        assert_eq!(fields[14], "42");
    }
}

#[test]
fn output_file_and_json_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.toml", GAUSSIAN);
    let out = dir.path().join("g.json");
    let o = run("gaussian-concentration", &cfg, &["--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let record = from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(record.rows.len(), 6);
    assert_eq!(record.config.seed, 42);
    assert_eq!(record.version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn record_replays_from_its_echoed_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.toml", GAUSSIAN);
    let first = from_json(&stdout(&run("gaussian-concentration", &cfg, &["--format", "json"]))).unwrap();
    let echoed = write(&dir, "echo.toml", &first.config.to_toml().unwrap());
    let replay = from_json(&stdout(&run("gaussian-concentration", &echoed, &["--format", "json"]))).unwrap();
    assert_eq!(first.rows, replay.rows);
    assert_eq!(first.outcome, replay.outcome);
}

#[test]
fn repeated_runs_are_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.toml", GAUSSIAN);
    let a = stdout(&run("gaussian-concentration", &cfg, &["--workers", "1"]));
    let b = stdout(&run("gaussian-concentration", &cfg, &["--workers", "1"]));
    let c = stdout(&run("gaussian-concentration", &cfg, &["--workers", "4"]));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn svg_has_two_series_per_set() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.toml", GAUSSIAN);
    let o = run("gaussian-concentration", &cfg, &["--format", "svg"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let doc = roxmltree::Document::parse(&text).unwrap();
    let series: Vec<&str> = doc
        .descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .map(|n| n.attribute("data-series").unwrap())
        .collect();
    assert_eq!(series.len(), 4);
    for s in ["halfspace0:p_hat", "halfspace0:bound", "ball1:p_hat", "ball1:bound"] {
        assert!(series.contains(&s), "{series:?}");
    }
}

#[test]
fn residual_run_passes_and_fails_on_tolerance() {
    let dir = TempDir::new().unwrap();
    let ok = write(&dir, "r.toml", RESIDUAL);
    assert_eq!(run("stein-residual", &ok, &[]).status.code(), Some(0));
    let strict = write(&dir, "strict.toml", &format!("residual_tol = 1e-12\n{RESIDUAL}"));
    let o = run("stein-residual", &strict, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains(",fail,"));
}

#[test]
fn operational_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = run("lemmas", &missing, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());

    let cfg = write(&dir, "g.toml", GAUSSIAN);
    assert_eq!(run("berry-esseen", &cfg, &[]).status.code(), Some(1));

    let bad = write(&dir, "bad.toml", &format!("{GAUSSIAN}\nfoo = 1\n"));
    let o = run("gaussian-concentration", &bad, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("foo"));

    let small = write(&dir, "small.toml", &GAUSSIAN.replace("samples = 20000", "samples = 10"));
    let o = run("gaussian-concentration", &small, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("samples"));

    assert_eq!(run("gaussian-concentration", &cfg, &["--format", "xml"]).status.code(), Some(1));
    assert_eq!(bin().arg("no-such-command").output().unwrap().status.code(), Some(1));
}

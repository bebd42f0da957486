use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
schema_version = 1
name = "small"
trials = 6
seed = 11

[experiment]
kind = "custom"
trace = true

[params]
users = 4
frames = 10
chips = 30
paths = 20
"#;

fn uwbpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwbpc")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_csv_summary_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let out = dir.path().join("out");
    let o = uwbpc(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("small.csv")).unwrap();
    let mut lines = csv.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# uwbpc ") && comment.contains("seed=11") && comment.contains("trials=6"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for key in ["seed", "trial", "scenario_hash", "power_w", "sinr"] {
        assert!(header.contains(&key), "missing column {key}");
    }
    assert_eq!(lines.count(), 6 * 4);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("small.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["experiment"], "custom");
    assert!(out.join("small.trace.csv").exists());
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(uwbpc(&["run", &cfg, "--out", d.to_str().unwrap()]).status.code(), Some(0));
    }
    for f in ["small.csv", "small.summary.json", "small.trace.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn overrides_change_seed_trials_and_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let out = dir.path().join("o");
    let o = uwbpc(&[
        "run",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
        "--trials",
        "2",
        "--experiment",
        "table_q",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("small.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["trials"], 2);
    assert_eq!(summary["experiment"], "table_q");
    assert!(!out.join("small.trace.csv").exists());
}

#[test]
fn validate_reports_ok() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let o = uwbpc(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok (custom"));
}

#[test]
fn config_errors_exit_with_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.toml", SMALL.replace("paths = 20", "paths = 20\npathz = 1"), "pathz"),
        ("zero.toml", SMALL.replace("trials = 6", "trials = 0"), "trials"),
        ("neg.toml", SMALL.replace("paths = 20", "paths = 20\nnoise_var_w = -2.0"), "noise_var_w"),
        ("syntax.toml", SMALL.replace("users = 4", "users = "), ""),
    ];
    for (name, text, field) in cases {
        let cfg = write(dir.path(), name, &text);
        for args in [vec!["validate", cfg.as_str()], vec!["run", cfg.as_str()]] {
            let o = uwbpc(&args);
            assert_eq!(o.status.code(), Some(1), "{name}: {}", stderr(&o));
            assert!(stderr(&o).contains(field), "{name}: {}", stderr(&o));
        }
    }
    let o = uwbpc(&["validate", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = write(dir.path(), "s.toml", SMALL);
    let o = uwbpc(&["run", &cfg, "--experiment", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    // a regular file where the output directory should go
    let blocker = write(dir.path(), "blocker", "");
    let o = uwbpc(&["run", &cfg, "--out", &blocker]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

use std::path::Path;
use std::process::{Command, Output};

fn pnrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMOKE: [&str; 8] = [
    "--set",
    "agent.max_steps=1200",
    "--set",
    "agent.random_steps=200",
    "--set",
    "agent.learning_starts=200",
    "--set",
    "agent.hidden=[16]",
];

#[test]
fn pn_check_builtin_passes() {
    let o = pnrl(&["pn", "check", "traffic_light", "--bound", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("nodes: 5"));
    assert!(s.contains("edges: 8"));
    assert!(s.contains("1-safe: true"));
    assert!(s.contains("deadlocks: none"));
}

#[test]
fn pn_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("source.json");
    std::fs::write(
        &source,
        r#"{"places":[{"id":"p","tokens":0}],"transitions":["t"],"arcs":[{"from":"t","to":"p","weight":1}]}"#,
    )
    .unwrap();
    let o = pnrl(&["pn", "check", source.to_str().unwrap(), "--bound", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("truncated: true"));

    let dead = dir.path().join("dead.json");
    std::fs::write(
        &dead,
        r#"{"places":[{"id":"p","tokens":0}],"transitions":["t"],"arcs":[{"from":"p","to":"t","weight":1}]}"#,
    )
    .unwrap();
    let o = pnrl(&["pn", "check", dead.to_str().unwrap(), "--bound", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("deadlocks: 1"));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"places":[]}"#).unwrap();
    assert_eq!(pnrl(&["pn", "check", broken.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(pnrl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(pnrl(&["baseline", "--version", "v3"]).status.code(), Some(1));
    let o = pnrl(&["train", "--set", "weights.w0=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("w0"));
}

#[test]
fn missing_model_is_a_runtime_error() {
    let o = pnrl(&["eval", "--model", "/nonexistent/model.bin"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn baseline_prints_a_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pnrl(&["baseline", "--version", "v1", "--episodes", "3", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("model,params,timesteps_min"));
    assert!(s.contains("Baseline v1"));
    assert!(dir.path().join("episodes.csv").exists());
}

fn train(dir: &Path, seed: &str) {
    let mut args = vec!["train", "--out", dir.to_str().unwrap(), "--set", seed];
    args.extend_from_slice(&SMOKE);
    let o = pnrl(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn train_is_byte_reproducible_and_evaluates() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    train(a.path(), "seed=11");
    train(b.path(), "seed=11");
    for f in ["model.bin", "training.csv", "config.resolved.toml", "model.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let model = a.path().join("model.bin");
    let o = pnrl(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--episodes",
        "2",
        "--trace",
        "--violations",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PN-CDQN"));
    for f in ["episodes.csv", "summary.csv", "trace.csv", "violations.csv"] {
        assert!(a.path().join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_smoke_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(&grid, "w2 = [0.0, 1.0]\nw3 = [0.0, 1.5]\n").unwrap();
    let out = dir.path().join("sweep");
    let mut args = vec![
        "sweep",
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--episodes",
        "2",
        "--jobs",
        "2",
    ];
    args.extend_from_slice(&SMOKE);
    let o = pnrl(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let board = std::fs::read_to_string(out.join("leaderboard.csv")).unwrap();
    assert_eq!(board.lines().count(), 5);
    assert_eq!(std::fs::read_to_string(out.join("failures.csv")).unwrap(), "cell,error\n");
}

use std::path::Path;
use std::process::{Command, Output};

fn inolml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inolml"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, "preset = tiny\ntotal_iters = 40\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_identical_metrics_twice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = inolml(&["run", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("seed 3:"));
    }
    for file in ["metrics.jsonl", "metrics.csv"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        assert!(!fa.is_empty());
        assert_eq!(fa, std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn strategy_override_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("r");
    let o = inolml(&["run", "--config", &cfg, "--strategy", "random", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(text.starts_with("iter,test_acc,"));
}

#[test]
fn sweep_makes_one_directory_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("sweep");
    let o = inolml(&["sweep", "--config", &cfg, "--seeds", "0..=2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for s in 0..3 {
        assert!(out.join(format!("seed-{s}/metrics.jsonl")).is_file());
    }
    assert!(!out.join("seed-3").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("over 3 seeds"));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "m_val = 9\nk_lower = 4\n").unwrap();
    let missing = dir.path().join("missing.cfg");
    for args in [
        vec!["run", "--config", missing.to_str().unwrap()],
        vec!["run", "--config", bad.to_str().unwrap()],
        vec!["run", "--config", bad.to_str().unwrap(), "--strategy", "nope"],
        vec!["sweep", "--config", bad.to_str().unwrap(), "--seeds", "4..2"],
    ] {
        let o = inolml(&args);
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn oracle_check_passes() {
    let o = inolml(&["oracle-check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

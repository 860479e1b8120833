use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "[scenario]\nkind = \"effective_mass\"\nname = \"small\"\n[grid]\nn_points = 64\nx_min = -12.0\nx_max = 12.0\n\
[state]\nsigma_x = 0.8\n[schedule]\ndt = 1.0\nn_steps = 40\nrecord_every = 10\n";

fn qre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qre"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_a_deterministic_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let mut texts = Vec::new();
    for sub in ["a", "b"] {
        let out = tmp.path().join(sub);
        let o = qre(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let files = csv_files(&out);
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert!(text.contains("fig4"));
        assert!(out.read_dir().unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "gp")));
        texts.push(text);
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn validate_reports_and_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = qre(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!o.stdout.is_empty());
}

#[test]
fn configuration_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[scenario]\nkind = \"tunneling\"\nunknown_key = 3\n");
    assert_eq!(qre(&["validate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qre(&["validate"]).status.code(), Some(2));
    let odd = write_config(tmp.path(), SMALL);
    assert_eq!(
        qre(&["validate", "--config", odd.to_str().unwrap(), "--grid-n", "100"]).status.code(),
        Some(2)
    );
}

#[test]
fn infeasible_jets_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[scenario]\nkind = \"tunneling\"\n[grid]\nn_points = 64\n[environment]\ncp0 = 5e-4\np0 = 1e-3\n",
    );
    assert_eq!(qre(&["validate", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn guard_failures_exit_with_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = qre(&["validate", "--config", cfg.to_str().unwrap(), "--dt", "50"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let o = qre(&["oracle-check", "--steps", "5", "--tolerance", "1e-30"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn oracle_check_passes_on_reduced_families() {
    let o = qre(&["oracle-check", "--steps", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 5);
}

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::scenario;

fn footstep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_footstep"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_artifacts_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("straight-5m.toml");
    let o = footstep(&["run", path(&s), "--out-dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("success"), "{text}");
    for ext in ["plan.csv", "plan.json", "svg"] {
        let n = std::fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(ext))
            .count();
        assert_eq!(n, 1, "{ext}");
    }
}

#[test]
fn sim_mode_writes_a_tick_log() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("straight-5m.toml");
    let o = footstep(&["run", path(&s), "--mode", "sim", "--out-dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("ticks.csv"));
}

#[test]
fn failed_search_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("wall.toml");
    let o = footstep(&[
        "run",
        path(&s),
        "--penalty",
        "off",
        "--max-iter",
        "2000",
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("iteration"), "{}", stdout(&o));
}

#[test]
fn bad_input_exits_with_three() {
    let o = footstep(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/nonexistent/scenario.toml"));

    let o = footstep(&["run", path(&scenario("wall.toml")), "--heuristic", "magic"]);
    assert_eq!(o.status.code(), Some(3));

    let o = footstep(&["launch"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn parse_errors_name_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.toml");
    std::fs::write(&file, "name = \"broken\"\n[map]\nsize_x_m = = 2.0\n").unwrap();
    let o = footstep(&["run", path(&file), "--out-dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("broken.toml:3:"), "{err}");
}

#[test]
fn compare_prints_a_table_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = footstep(&[
        "compare",
        path(&scenario("turning/turn-030.toml")),
        path(&scenario("turning/turn-m045.toml")),
        "--a",
        "heuristic=distance",
        "--b",
        "heuristic=distance+angle",
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("turn-030") && text.contains("turn-m045") && text.contains("mean"),
        "{text}"
    );
    let csv = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(csv.starts_with("scenario,"));
}

#[test]
fn compare_rejects_unknown_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = footstep(&[
        "compare",
        path(&scenario("turning/turn-030.toml")),
        "--a",
        "flavor=sweet",
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_and_version_exit_cleanly() {
    for flag in ["--help", "--version"] {
        let o = footstep(&[flag]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("footstep"));
    }
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_offshore-sim"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn exec(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn run_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    for (format, file) in [("csv", "t.csv"), ("jsonl", "t.jsonl")] {
        let out = dir.path().join(file);
        let o = exec(bin().args(["run", "--scenario"]).arg(scenario("los_calm.toml")).args(["--format", format, "--out"]).arg(&out));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        // metadata line plus 1500 steps, plus a header for CSV
        let expected = if format == "csv" { 1502 } else { 1501 };
        assert_eq!(text.lines().count(), expected, "{format}");
    }
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = exec(
        bin().args(["run", "--scenario"])
            .arg(scenario("island.toml"))
            .args(["--seed", "99", "--duration", "2.5", "--out"])
            .arg(&out),
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().ends_with("seed=99"));
    assert_eq!(text.lines().count(), 2 + 25);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.jsonl"), dir.path().join("b.jsonl")];
    for p in &paths {
        let o = exec(bin().args(["run", "--scenario"]).arg(scenario("island_relay.toml")).args(["--format", "jsonl", "--out"]).arg(p));
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn validate_reports_ok() {
    let o = exec(bin().args(["validate", "--scenario"]).arg(scenario("landing.toml")));
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok (1500 steps"));
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario("los_calm.toml")).unwrap().replace("duration = 150.0", "duration = 150.0\nspeed = 3");
    std::fs::write(&bad, text).unwrap();
    for sub in ["validate", "run"] {
        let o = exec(bin().args([sub, "--scenario"]).arg(&bad));
        assert_eq!(o.status.code(), Some(2), "{sub}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("speed"));
    }
    let o = exec(bin().args(["run", "--scenario"]).arg(scenario("los_calm.toml")).args(["--duration", "-1"]));
    assert_eq!(o.status.code(), Some(2));
    let o = exec(bin().args(["validate", "--scenario"]).arg(dir.path().join("missing.toml")));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_abort_exits_3_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runaway.toml");
    let text = std::fs::read_to_string(scenario("los_drift.toml")).unwrap().replace("drift_north = 0.5", "drift_north = 1.0e6");
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("partial.csv");
    let o = exec(bin().args(["run", "--scenario"]).arg(&path).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("aborted"));
    let lines = std::fs::read_to_string(&out).unwrap().lines().count();
    assert!(lines > 2 && lines < 1502, "{lines}");
}

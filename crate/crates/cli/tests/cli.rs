use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn preempt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_preempt")).args(args).output().unwrap()
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Copy of a shipped scenario with its relative paths made absolute and
/// some keys replaced.
fn variant(dir: &Path, base: &str, overrides: &[(&str, &str)]) -> PathBuf {
    let root = scenarios();
    let text = fs::read_to_string(root.join(base)).unwrap();
    let mut out = String::new();
    for line in text.lines() {
        let key = line.split('=').next().unwrap().trim();
        if overrides.iter().any(|(k, _)| *k == key) {
            continue;
        }
        out.push_str(&line.replace("= ../", &format!("= {}/../", root.display())));
        out.push('\n');
    }
    for (k, v) in overrides {
        out.push_str(&format!("{k} = {v}\n"));
    }
    let file = dir.join(base);
    fs::write(&file, out).unwrap();
    file
}

#[test]
fn shipped_scenarios_validate() {
    for entry in fs::read_dir(scenarios()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "cfg") {
            let o = preempt(&["validate", path(&p)]);
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
        }
    }
}

#[test]
fn validate_lists_every_bad_key_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "name = friction_step\nduration = -1\ndt = 0\nwibble = 1\n").unwrap();
    let o = preempt(&["validate", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for key in ["duration", "dt", "wibble"] {
        assert!(err.contains(key), "{key} missing from {err}");
    }
}

#[test]
fn missing_scenario_file_exits_2() {
    let o = preempt(&["run", "/nonexistent/scenario.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_a_log_and_plotdata_turns_it_into_tables() {
    let dir = tempfile::tempdir().unwrap();
    let spec = variant(dir.path(), "friction_step.cfg", &[("duration", "0.5")]);
    let log = dir.path().join("launch.csv");
    let o = preempt(&["run", path(&spec), "--out", path(&log)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().count(), 501);

    let o = preempt(&["plotdata", path(&log), "--figure", "fig3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for panel in ["a_torques", "b_speeds", "c_slip"] {
        assert!(dir.path().join(format!("launch_fig3_{panel}.csv")).exists());
    }

    let o = preempt(&["plotdata", path(&log), "--figure", "fig9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plotdata_rejects_logs_it_cannot_use() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("thin.csv");
    fs::write(&log, "t,v\n0.0,1.0\n").unwrap();
    let o = preempt(&["plotdata", path(&log), "--figure", "fig3", "--out-dir", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());

    let o = preempt(&["plotdata", path(&dir.path().join("absent.csv")), "--figure", "fig3"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn leaving_the_road_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("passive.csv");
    let o = preempt(&["run", path(&scenarios().join("u_turn_passive.cfg")), "--out", path(&log)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(fs::read_to_string(&log).unwrap().lines().last().unwrap().starts_with("FAULT,"));
}

#[test]
fn sweep_writes_one_log_per_cell_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = variant(dir.path(), "delay_sweep.cfg", &[("duration", "0.6"), ("sweep.delays", "0, 0.1")]);
    let out = dir.path().join("sweep");
    let o = preempt(&["sweep", path(&spec), "--out-dir", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 7, "{summary}");
    let logs = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path() != out.join("sweep_summary.csv")).count();
    assert_eq!(logs, 6);
}

use std::fs;
use std::path::Path;
use std::process::Command;

use sslrc_core::io::read_manifest;

fn sslrc(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_sslrc")).args(args).output().unwrap().status.code().unwrap()
}

const PLAN: &str = r#"
mode = "unknown-pt"
n_cal = 4
n_test = 2
alpha_mc = 0.5
[dataset]
k_values = [1, 3]
samples_per_k = 3
duration_s = 0.2
[[dataset.rooms]]
dims = [6, 5, 3]
order = 0
absorption = 0.5
[analysis]
grid_step_deg = 10
"#;

fn write_plan(dir: &Path, text: &str) -> String {
    let p = dir.join("plan.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_writes_recordings_and_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_plan(tmp.path(), PLAN);
    let out = tmp.path().join("rec");
    assert_eq!(sslrc(&["simulate", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]), 0);
    for i in 0..6 {
        let m = read_manifest(&out.join(format!("scene_{i:05}.json"))).unwrap();
        assert_eq!(m.truths.len(), if i < 3 { 1 } else { 3 });
        assert_eq!(m.channels, 12);
        assert!(out.join(&m.wav).exists());
    }
}

#[test]
fn seed_flag_changes_the_scenes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_plan(tmp.path(), PLAN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(sslrc(&["simulate", "--config", &cfg, "--seed", "1", "--out", a.to_str().unwrap()]), 0);
    assert_eq!(sslrc(&["simulate", "--config", &cfg, "--seed", "2", "--out", b.to_str().unwrap()]), 0);
    let name = "scene_00000.json";
    assert_ne!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    // contract error in the plan
    let bad = write_plan(tmp.path(), &PLAN.replace("alpha_mc = 0.5", "alpha_mc = 0.5\ndelta = 2.0"));
    assert_eq!(sslrc(&["simulate", "--config", &bad, "--out", dir]), 1);
    // every scene places the array outside the room
    let broken = write_plan(tmp.path(), &PLAN.replace("duration_s = 0.2", "duration_s = 0.2\narray_center = [0.01, 1, 1]"));
    assert_eq!(sslrc(&["simulate", "--config", &broken, "--out", &format!("{dir}/rec")]), 2);
    // a trial report without trials
    let cfg = write_plan(tmp.path(), PLAN);
    let empty = tmp.path().join("trials.json");
    fs::write(&empty, r#"{"mode":"unknown-pt","alpha_mc":0.5,"alpha_md":0.1,"delta":0.1,"trials":[],"groups":[]}"#).unwrap();
    let rep = format!("{dir}/report");
    assert_eq!(sslrc(&["report", "--config", &cfg, "--input", empty.to_str().unwrap(), "--out", &rep]), 1);
    assert!(!Path::new(&rep).join("summary.csv").exists());
}

#[test]
fn evaluate_and_report_in_memory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_plan(tmp.path(), &PLAN.replace("samples_per_k = 3", "samples_per_k = 5").replace("n_cal = 4", "n_cal = 6\ntrials = 3"));
    let trials = tmp.path().join("trials.json");
    let rep = tmp.path().join("report");
    assert_eq!(sslrc(&["evaluate", "--config", &cfg, "--out", trials.to_str().unwrap()]), 0);
    assert_eq!(sslrc(&["report", "--config", &cfg, "--input", trials.to_str().unwrap(), "--out", rep.to_str().unwrap()]), 0);
    let summary = fs::read_to_string(rep.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert_eq!(fs::read_to_string(rep.join("trials.csv")).unwrap().lines().count(), 4);
}

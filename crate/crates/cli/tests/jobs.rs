use std::process::Command as Proc;

use arakelov_cli::{run_job, Cache, Command, JobSpec};
use serde_json::{json, Value};

fn module(a: i64, b: i64, c: i64) -> Value {
    json!({ "rank": 2, "torsion": [], "norm": { "kind": "ellipsoid", "gram": [[a, b], [b, c]] } })
}

fn specs() -> Vec<JobSpec> {
    let mut out = Vec::new();
    for k in 0..50i64 {
        let (a, c) = (1 + k % 4, 1 + (k / 4) % 3);
        let b = if a * c > 1 { k % 2 } else { 0 };
        let spec = match k % 5 {
            0 => JobSpec::new(Command::Hzero).with("module", module(a, b, c)),
            1 => JobSpec::new(Command::Hone).with("module", module(a, b, c)),
            2 => JobSpec::new(Command::Chi).with("module", module(a, b, c)),
            3 => JobSpec::new(Command::Dual).with("module", module(a, b, c)),
            _ => JobSpec::new(Command::CurveVolume)
                .with("L", json!({ "ring": "QQ", "weights": [0.1 + 0.01 * k as f64] }))
                .with("m_max", json!(5)),
        };
        out.push(JobSpec { seed: k as u64, ..spec });
    }
    out
}

#[test]
fn cache_replay_matches_fresh_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::open(dir.path()).unwrap();
    for spec in specs() {
        let (first, hit) = cache.run(&spec).unwrap();
        assert!(!hit);
        let (replayed, hit) = cache.run(&spec).unwrap();
        assert!(hit);
        assert_eq!(first, replayed);
        let fresh = run_job(&spec).unwrap();
        assert_eq!(fresh.payload, replayed.payload);
        assert_eq!(fresh.digest, replayed.digest);
    }
}

#[test]
fn payloads_are_deterministic() {
    let spec = JobSpec::new(Command::Chi)
        .with("module", json!({ "rank": 2, "torsion": [3], "norm": { "kind": "max_abs", "functionals": [[1, 0], [0, 1], [1, 1]] } }))
        .with("force_monte_carlo", json!(true))
        .with("samples", json!(20000))
        .with("target_rel", json!(0.5));
    let a = serde_json::to_string(&run_job(&spec).unwrap().payload).unwrap();
    let b = serde_json::to_string(&run_job(&spec).unwrap().payload).unwrap();
    assert_eq!(a, b);
}

#[test]
fn job_file_with_referenced_module() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("l.json"), r#"{"ring":"QQ_i","weights":[0.2,0.2]}"#).unwrap();
    std::fs::write(dir.path().join("job.json"), r#"{"command":"curve-degree","inputs":{"L":"l.json"}}"#).unwrap();
    let spec = JobSpec::load(&dir.path().join("job.json")).unwrap();
    let r = run_job(&spec).unwrap();
    assert!((r.payload["adeg"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_arakelov"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| bin().arg("--cache-dir").arg(dir.path()).args(args).output().unwrap();

    let ok = run(&["curve", "degree", "--module", r#"{"ring":"QQ","weights":[0.3]}"#]);
    assert_eq!(ok.status.code(), Some(0));
    let rec: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(rec["command"], "curve-degree");

    assert_eq!(run(&["dual", "--module", "{oops"]).status.code(), Some(2));
    assert_eq!(run(&["dual", "--module", "/nonexistent/m.json"]).status.code(), Some(1));
    let tight = r#"{"rank":3,"torsion":[],"norm":{"kind":"ellipsoid","gram":[["1/100",0,0],[0,"1/100",0],[0,0,"1/100"]]}}"#;
    assert_eq!(run(&["--budget", "10", "--no-cache", "hzero", "--module", tight]).status.code(), Some(3));
}

#[test]
fn job_from_stdin_and_outputs() {
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut child = bin()
        .args(["--no-cache", "--format", "csv,json", "--out"])
        .arg(&out)
        .args(["run", "-"])
        .stdin(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(br#"{"command":"curve-volume","inputs":{"L":{"ring":"QQ","weights":[0.5]},"m_max":4}}"#)
        .unwrap();
    assert!(child.wait().unwrap().success());
    let csv = std::fs::read_to_string(out.join("curve-volume.csv")).unwrap();
    assert!(csv.starts_with("m,h0,h0_over_m\n"));
    assert_eq!(csv.lines().count(), 5);
    assert!(out.join("curve-volume.json").exists());
}

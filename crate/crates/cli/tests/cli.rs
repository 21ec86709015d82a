use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use crowdopt_core::linesearch::OptConfig;
use crowdopt_service::events::write_event;
use crowdopt_service::simulate::{simulate, SimulateRequest};
use crowdopt_service::{Domain, ModeConfig, Session, SessionSpec};
use tempfile::TempDir;

fn crowdopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdopt")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = crowdopt(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn photo_bench_writes_traces_and_distances() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    ok(&["bench", "--domain", "photo", "--trials", "3", "--out", out.to_str().unwrap()]);
    for k in 0..3 {
        let trace = read(&out.join(format!("trial-{k}/trace.csv")));
        let lines: Vec<&str> = trace.lines().collect();
        assert_eq!(lines.len(), 16, "header plus 15 iterations");
        assert!(lines[0].starts_with("iteration,t_aggregated,"));
        assert!(lines[0].ends_with("x_best_5,true_g"));
        assert!(lines[15].starts_with("15,"));
    }
    let distances = read(&out.join("distances.csv"));
    let rows: Vec<&str> = distances.lines().collect();
    assert_eq!(rows[0], "iteration,trial_a,trial_b,distance");
    assert_eq!(rows.len(), 1 + 15 * 3);
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(summary["trials"].as_array().unwrap().len(), 3);
}

#[test]
fn single_trial_has_no_distance_matrix() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    ok(&["bench", "--domain", "photo", "--trials", "1", "--iterations", "3", "--out", out.to_str().unwrap()]);
    assert!(out.join("trial-0/trace.csv").exists());
    assert!(!out.join("distances.csv").exists());
}

#[test]
fn bench_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            ok(&["bench", "--trials", "2", "--seed", "9", "--iterations", "5", "--out", out.to_str().unwrap()]);
            out
        })
        .collect();
    for file in ["summary.json", "trial-0/trace.csv", "trial-1/trace.csv"] {
        assert_eq!(read(&runs[0].join(file)), read(&runs[1].join(file)), "{file}");
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bench.json");
    fs::write(&cfg, r#"{"mode":"estimate","n":2,"trials":2,"estimate":{"samples":60,"tasks":40}}"#).unwrap();
    let out = dir.path().join("run");
    ok(&["bench", "--config", cfg.to_str().unwrap(), "--trials", "1", "--out", out.to_str().unwrap()]);
    let values = read(&out.join("trial-0/values.csv"));
    assert_eq!(values.lines().next(), Some("x_0,x_1,y,true_g"));
    assert_eq!(values.lines().count(), 61);
    assert_eq!(read(&out.join("trial-0/comparisons.csv")).lines().count(), 40 * 10);
    assert!(!out.join("trial-1").exists());
    let field: serde_json::Value = serde_json::from_str(&read(&out.join("trial-0/field.json"))).unwrap();
    assert_eq!(field["weights"].as_array().unwrap().len(), 60);

    fs::write(&cfg, r#"{"mode":"estimate","bogus":1}"#).unwrap();
    let bad = crowdopt(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bogus"));
}

fn write_log(path: &Path, session: &Session) {
    let mut f = File::create(path).unwrap();
    for e in session.events() {
        write_event(&mut f, e).unwrap();
    }
}

fn live_session() -> Session {
    let spec = SessionSpec { domain: Domain::Synthetic, n: 2, seed: 4, config: ModeConfig::Optimize(OptConfig::default()) };
    let mut s = Session::create("cli".into(), spec).unwrap();
    simulate(&mut s, &SimulateRequest::default()).unwrap();
    s
}

#[test]
fn replay_reproduces_live_summary() {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("s.jsonl");
    let live = live_session();
    write_log(&log, &live);
    let printed: serde_json::Value = serde_json::from_str(&ok(&["replay", log.to_str().unwrap()])).unwrap();
    assert_eq!(printed, serde_json::to_value(live.summary()).unwrap());
}

#[test]
fn replay_of_empty_and_truncated_logs() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.jsonl");
    File::create(&empty).unwrap();
    let printed: serde_json::Value = serde_json::from_str(&ok(&["replay", empty.to_str().unwrap()])).unwrap();
    assert_eq!(printed["iteration"], 0);

    let log = dir.path().join("t.jsonl");
    let live = live_session();
    write_log(&log, &live);
    let mut text = read(&log);
    let full: serde_json::Value = serde_json::from_str(&ok(&["replay", log.to_str().unwrap()])).unwrap();
    text.push_str("{\"event\":\"response\",\"ta");
    fs::write(&log, &text).unwrap();
    let truncated: serde_json::Value = serde_json::from_str(&ok(&["replay", log.to_str().unwrap()])).unwrap();
    assert_eq!(truncated, full);
}

#[test]
fn replay_reports_corrupt_line() {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("c.jsonl");
    let live = live_session();
    write_log(&log, &live);
    let mut lines: Vec<String> = read(&log).lines().map(String::from).collect();
    lines[2] = "not json".into();
    let mut f = File::create(&log).unwrap();
    for l in &lines {
        writeln!(f, "{l}").unwrap();
    }
    let out = crowdopt(&["replay", log.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn render_writes_png() {
    let dir = TempDir::new().unwrap();
    let png = dir.path().join("x.png");
    ok(&["render", "--params", "0.5,0.5,0.5,0.5,0.5,0.5", "--out", png.to_str().unwrap()]);
    assert_eq!(&fs::read(&png).unwrap()[..8], b"\x89PNG\r\n\x1a\n");
    let bad = crowdopt(&["render", "--params", "0.5,2", "--out", png.to_str().unwrap()]);
    assert!(!bad.status.success());
}

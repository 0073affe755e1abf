use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use degrade_core::io::{read_png, write_png};
use degrade_core::schedule::read_trace;
use degrade_core::Image8;

fn degrade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degrade")).env_remove("DEGRADE_OUT_DIR").args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn frame() -> Image8 {
    Image8::from_fn(32, 40, |y, x| [(x * 6) as u8, (y * 7) as u8, 90])
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    write_png(&input, &frame()).unwrap();
    let out = dir.path().join("out.png");

    assert_eq!(code(&degrade(&["corrupt", p(&input), p(&out), "--mode", "haze", "--severity", "0.5"])), 0);
    assert_eq!(code(&degrade(&["corrupt", p(&input), p(&out), "--mode", "fog", "--severity", "0.5"])), 1);
    assert_eq!(code(&degrade(&["corrupt", p(&input), p(&out), "--mode", "haze", "--severity", "1.5"])), 1);
    let missing = dir.path().join("nope.png");
    assert_eq!(code(&degrade(&["corrupt", p(&missing), p(&out), "--mode", "haze", "--severity", "0.5"])), 2);
    assert_eq!(code(&degrade(&["frobnicate"])), 1);
    assert_eq!(code(&degrade(&["--help"])), 0);

    let bad_cfg = dir.path().join("bad.toml");
    fs::write(&bad_cfg, "[rain]\nopacity = 3.0\n").unwrap();
    let out_cfg = degrade(&["--config", p(&bad_cfg), "corrupt", p(&input), p(&out), "--mode", "rain", "--severity", "0.5"]);
    assert_eq!(code(&out_cfg), 1);
}

#[test]
fn corrupt_log_reports_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    write_png(&input, &frame()).unwrap();
    let out = dir.path().join("out.png");
    let run = degrade(&["corrupt", p(&input), p(&out), "--mode", "jpeg", "--severity", "0.7", "--seed", "4"]);
    assert_eq!(code(&run), 0);
    let log: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(log["params"]["jpeg_quality"], 34);
    assert_eq!(log["seed"], 4);
    assert_eq!(log["mode_code"], 7);
    assert_eq!(read_png(&out).unwrap().height(), 32);
}

#[test]
fn haze_at_zero_severity_keeps_the_frame() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    write_png(&input, &frame()).unwrap();
    let out = dir.path().join("out.png");
    assert_eq!(code(&degrade(&["corrupt", p(&input), p(&out), "--mode", "haze", "--severity", "0"])), 0);
    assert_eq!(read_png(&out).unwrap(), frame());
}

#[test]
fn stream_with_full_stickiness_stays_in_one_mode() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    fs::create_dir_all(&frames).unwrap();
    for t in 0..12 {
        write_png(&frames.join(format!("{t:03}.png")), &frame()).unwrap();
    }
    let out = dir.path().join("out");
    assert_eq!(code(&degrade(&["stream", p(&frames), "-o", p(&out), "--ps", "1.0", "--seed", "3"])), 0);
    let (_, records) = read_trace(std::io::BufReader::new(fs::File::open(out.join("trace.jsonl")).unwrap())).unwrap();
    assert_eq!(records.len(), 12);
    assert!(records.iter().all(|r| r.mode_code == records[0].mode_code));
    assert!(out.join("007.png").is_file());

    let stats = degrade(&["stats", p(&out.join("trace.jsonl")), "--json"]);
    assert_eq!(code(&stats), 0);
    let v: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(v["stats"]["self_transition_rate"], 1.0);
}

#[test]
fn stream_of_empty_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let run = degrade(&["stream", p(&empty), "-o", p(&dir.path().join("out"))]);
    assert_eq!(code(&run), 2);
}

#[test]
fn single_frame_stream_has_no_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    fs::create_dir_all(&frames).unwrap();
    write_png(&frames.join("0.png"), &frame()).unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&degrade(&["stream", p(&frames), "-o", p(&out)])), 0);
    let stats = degrade(&["stats", p(&out.join("trace.jsonl")), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(v["stats"]["steps"], 1);
    assert!(v["stats"]["self_transition_rate"].is_null());
}

#[test]
fn verify_theory_reports_and_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.jsonl");
    let run = degrade(&["verify-theory", "--instances", "50", "--report", p(&report), "--dump-dir", p(dir.path())]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["summary"]["instances"], 50);
    assert_eq!(last["summary"]["contamination_violations"], 0);

    let one = degrade(&["verify-theory", "--instance-id", "17", "--encoder", "identity", "--only", "contamination"]);
    assert_eq!(code(&one), 0);
    let line: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&one.stdout).lines().next().unwrap()).unwrap();
    assert_eq!(line["instance_id"], 17);
    assert_eq!(line["margin"], 0.0);
    assert!(line.get("fano_status").is_none());

    assert_eq!(code(&degrade(&["verify-theory", "--max-alphabet", "1"])), 1);
}

#[test]
fn dataset_without_frames_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = degrade(&["gen-dataset", p(dir.path()), "-o", p(&dir.path().join("out")), "--task", "walker:10:0,0,0", "--n", "2"]);
    assert_eq!(code(&run), 2);
    let bad = degrade(&["gen-dataset", p(dir.path()), "--task", "walker:ten:0,0,0"]);
    assert_eq!(code(&bad), 1);
}

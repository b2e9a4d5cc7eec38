mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn write_inputs(dir: &Path) {
    for (id, wav, align) in common::files() {
        std::fs::write(dir.join(format!("{id}.wav")), wav).unwrap();
        std::fs::write(dir.join(format!("{id}.json")), align).unwrap();
    }
    let script: Value = serde_json::from_str(common::REPLACE_SCRIPT).unwrap();
    let ops = json!({ "ops": script["ops"] });
    std::fs::write(dir.join("s.json"), ops.to_string()).unwrap();
}

fn speechedit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speechedit"))
        .current_dir(dir)
        .env_remove("SPEECHEDIT_CONFIG")
        .args(args)
        .output()
        .unwrap()
}

const EDIT: [&str; 9] = ["edit", "--in", "a.wav", "--align", "a.json", "--source", "b.wav:b.json", "--script", "s.json"];

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = speechedit(dir.path(), &["edit", "--frobnicate"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&speechedit(dir.path(), &["transmogrify"])), 2);
    assert_eq!(code(&speechedit(dir.path(), &[])), 2);
}

#[test]
fn malformed_source_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let out = speechedit(dir.path(), &["edit", "--in", "a.wav", "--align", "a.json", "--source", "b.wav", "--script", "s.json", "--out", "o.wav"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_inputs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let missing = speechedit(dir.path(), &["analyze", "--in", "nope.wav", "--align", "a.json"]);
    assert_eq!(code(&missing), 3);

    std::fs::write(dir.path().join("bad.json"), r#"{"ops":[{"op":"cut","target":[7,2]}]}"#).unwrap();
    let mut args = EDIT.to_vec();
    args[8] = "bad.json";
    args.extend(["--out", "o.wav"]);
    assert_eq!(code(&speechedit(dir.path(), &args)), 3);

    std::fs::write(dir.path().join("config.json"), r#"{"crossfade_seconds": 5}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_speechedit"))
        .current_dir(dir.path())
        .env("SPEECHEDIT_CONFIG", "config.json")
        .args(["analyze", "--in", "a.wav", "--align", "a.json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "config path comes from the environment");
}

#[test]
fn failing_postprocess_is_a_pipeline_error() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    std::fs::write(dir.path().join("config.json"), r#"{"postprocess": {"command": "exit 1"}}"#).unwrap();
    let mut args = vec!["--config", "config.json"];
    args.extend(EDIT);
    args.extend(["--out", "o.wav"]);
    let out = speechedit(dir.path(), &args);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analyze_prints_a_contour() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let out = speechedit(dir.path(), &["analyze", "--in", "a.wav", "--align", "a.json"]);
    assert_eq!(code(&out), 0);
    let contour: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(contour["hop"], 0.01);
    assert_eq!(contour["f0"].as_array().unwrap().len(), contour["voiced"].as_array().unwrap().len());
}

#[test]
fn edit_writes_audio_and_result() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let mut args = EDIT.to_vec();
    args.extend(["--seed", "7", "--out", "out.wav"]);
    let out = speechedit(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out.wav").is_file());
    let result: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(result["seed"], 7);
    assert!(result["targets"]["durations"].is_array());
}

#[test]
fn candidates_then_render_matches_edit() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let mut args = EDIT.to_vec();
    args[0] = "candidates";
    args.extend(["--seed", "3", "--n", "3", "--out", "cands"]);
    assert_eq!(code(&speechedit(dir.path(), &args)), 0);
    let files: Vec<_> = std::fs::read_dir(dir.path().join("cands")).unwrap().collect();
    assert_eq!(files.len(), 3);

    let mut args = EDIT.to_vec();
    args[0] = "render";
    args.extend(["--seed", "3", "--targets", "cands/candidate-2.json", "--out", "explicit.wav"]);
    assert_eq!(code(&speechedit(dir.path(), &args)), 0);
    let mut args = EDIT.to_vec();
    args.extend(["--seed", "3", "--candidate", "2", "--out", "picked.wav"]);
    assert_eq!(code(&speechedit(dir.path(), &args)), 0);
    let explicit = std::fs::read(dir.path().join("explicit.wav")).unwrap();
    assert_eq!(explicit, std::fs::read(dir.path().join("picked.wav")).unwrap());
}

#[test]
fn eval_writes_json_and_csv_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let manifest = json!({ "recordings": [
        { "id": "a", "wav": "a.wav", "alignment": "a.json" },
        { "id": "b", "wav": "b.wav", "alignment": "b.json" },
    ]});
    std::fs::write(dir.path().join("m.json"), manifest.to_string()).unwrap();
    let out = speechedit(dir.path(), &["eval", "--manifest", "m.json", "--conditions", "naive,proposed", "--out", "report/"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report/report.json")).unwrap()).unwrap();
    assert!(!report["rows"].as_array().unwrap().is_empty());
    let csv = std::fs::read_to_string(dir.path().join("report/report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "condition,metric,mean,median,count");

    let bad = speechedit(dir.path(), &["eval", "--manifest", "m.json", "--conditions", "bogus", "--out", "r2"]);
    assert_eq!(code(&bad), 3);
}

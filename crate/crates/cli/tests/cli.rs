//! End-to-end runs of the `thermal-hands` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermal-hands"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen_sequence(dir: &Path, frames: usize, max_hands: usize, seed: u64) {
    let out = bin(&[
        "gen",
        "sequence",
        "--output",
        p(dir),
        "--frames",
        &frames.to_string(),
        "--max-hands",
        &max_hands.to_string(),
        "--seed",
        &seed.to_string(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn truth_hands(dir: &Path) -> usize {
    std::fs::read_to_string(dir.join("truth.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["hands"].as_array().unwrap().len())
        .sum()
}

#[test]
fn record_count_equals_hand_count() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    gen_sequence(&frames, 100, 2, 3);
    let records = tmp.path().join("out.jsonl");
    let out = bin(&["run", "--input", p(&frames), "--output", p(&records)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), truth_hands(&frames));
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["schema", "frame_index", "box", "reference", "bubble", "wrist", "label", "confidence"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert!(first["wrist"]["provenance"].is_string());
    assert!(first.get("stage_timings").is_none());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    gen_sequence(&frames, 25, 3, 9);
    let a = bin(&["run", "--input", p(&frames), "--grid", "12"]);
    let b = bin(&["run", "--input", p(&frames), "--grid", "12"]);
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn timings_and_annotations_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    gen_sequence(&frames, 12, 2, 4);
    let notes = tmp.path().join("annotated");
    let out = bin(&["run", "--input", p(&frames), "--emit-timings", "--annotate", p(&notes)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8(out.stdout).unwrap();
    let rec: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!(rec["stage_timings"]["bubble_growth"].as_f64().unwrap() >= 0.0);
    assert_eq!(std::fs::read_dir(&notes).unwrap().count(), 12);
}

#[test]
fn empty_directory_fails_with_no_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["run", "--input", p(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no frames"));
}

#[test]
fn unreadable_frames_only_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    for i in 0..3 {
        std::fs::write(tmp.path().join(format!("f{i}.png")), b"garbage").unwrap();
    }
    let out = bin(&["run", "--input", p(tmp.path())]);
    assert!(!out.status.success());
}

#[test]
fn config_file_is_checked() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["gen", "config"]);
    assert!(out.status.success());
    let cfg = tmp.path().join("pipeline.toml");
    std::fs::write(&cfg, &out.stdout).unwrap();
    let frames = tmp.path().join("frames");
    gen_sequence(&frames, 12, 2, 5);
    assert!(bin(&["run", "--input", p(&frames), "--config", p(&cfg)]).status.success());

    std::fs::write(&cfg, "max_hands = 2\ncolour = 1\n").unwrap();
    let out = bin(&["run", "--input", p(&frames), "--config", p(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = bin(&["run", "--input", p(&frames), "--max-hands", "4"]);
    assert!(!out.status.success());
}

#[test]
fn train_then_label() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = tmp.path().join("shapes.thck");
    let out = bin(&[
        "train",
        "--output",
        p(&ckpt),
        "--per-class",
        "20",
        "--epochs",
        "1",
        "--batch-size",
        "16",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("held-out accuracy"));

    let frames = tmp.path().join("frames");
    gen_sequence(&frames, 12, 2, 6);
    let out = bin(&["run", "--input", p(&frames), "--checkpoint", p(&ckpt)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for line in String::from_utf8(out.stdout).unwrap().lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let label = rec["label"].as_u64().unwrap();
        assert!((1..=4).contains(&label));
        let c = rec["confidence"].as_f64().unwrap();
        assert!(c > 0.0 && c <= 1.0);
    }
}

#[test]
fn bench_prints_table() {
    let out = bin(&["bench", "--hands", "10", "--frames", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for col in ["BG_avg", "BG_min", "BG_max", "BS_avg", "BS_min", "BS_max", "frames/sec"] {
        assert!(text.contains(col), "{col} missing:\n{text}");
    }
}

#[test]
fn corpus_export_writes_masks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["gen", "corpus", "--output", p(tmp.path()), "--count", "3", "--wide-arm"]);
    assert!(out.status.success());
    let pngs = std::fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 3);
    assert!(tmp.path().join("truth.jsonl").exists());
}

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use facefuse::image::{save_image, Image};
use facefuse::sift::read_keypoints;
use facefuse::synth::{FaceScene, Perturbation};

fn facefuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facefuse")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn face(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let path = dir.join(name);
    save_image(&FaceScene::new(seed).render(&Perturbation::default(), 0), &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn extract_missing_image_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.pgm");
    let o = facefuse(&["extract", s(&missing), "--output", s(dir.path())]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("nowhere.pgm"), "{err}");
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn extract_constant_image_writes_empty_dump() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("flat.pgm");
    save_image(&Image::filled(100, 140, 128).unwrap(), &img).unwrap();
    let out = dir.path().join("out");
    let o = facefuse(&["extract", s(&img), "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "total"), "0");
    let dump = out.join("flat.keys");
    assert_eq!(std::fs::read_to_string(&dump).unwrap(), "");
}

#[test]
fn extract_face_dump_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let img = face(dir.path(), "face.pgm", 3);
    let o = facefuse(&["extract", s(&img), "--output", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let total: usize = value(&text, "total").parse().unwrap();
    let kps = read_keypoints(dir.path().join("face.keys")).unwrap();
    assert_eq!(kps.len(), total);
    assert!(total > 0);
    let per_region: usize = ["left_eye", "right_eye", "nose", "mouth"].iter().map(|r| value(&text, r).parse::<usize>().unwrap()).sum();
    assert!(per_region <= total);
}

#[test]
fn self_match_accepts_with_zero_distances() {
    let dir = tempfile::tempdir().unwrap();
    let img = face(dir.path(), "face.pgm", 7);
    let o = facefuse(&["match", s(&img), s(&img)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(value(&text, "local_distance"), "0.000000");
    assert_eq!(value(&text, "global_distance"), "0.000000");
    assert_eq!(value(&text, "decision"), "accept");
}

#[test]
fn empty_probe_under_strict_policy_fails() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.pgm");
    save_image(&Image::filled(100, 140, 90).unwrap(), &flat).unwrap();
    let img = face(dir.path(), "face.pgm", 1);
    let o = facefuse(&["match", s(&flat), s(&img)]);
    assert!(!o.status.success());
    assert!(stderr(&o).to_lowercase().contains("region"), "{}", stderr(&o));
}

#[test]
fn unrelated_scenes_rejected_under_trained_psi() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::write_synthetic_dataset(dir.path(), &[], &(500..508).collect::<Vec<_>>());
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, format!("dataset.manifest = {}\n", manifest.display())).unwrap();
    let a = face(dir.path(), "a.pgm", 40);
    let b = face(dir.path(), "b.pgm", 41);
    let o = facefuse(&["--config", s(&cfg), "match", s(&a), s(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "decision"), "reject", "{}", stdout(&o));
    let o = facefuse(&["--config", s(&cfg), "match", s(&a), s(&a)]);
    assert_eq!(value(&stdout(&o), "decision"), "accept");
}

fn toy_config(dir: &Path, training: bool, extra: &str) -> PathBuf {
    let training_ids: Vec<u64> = if training { vec![90, 91, 92] } else { Vec::new() };
    let manifest = common::write_synthetic_dataset(dir, &[1, 2, 3, 4], &training_ids);
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, format!("dataset.manifest = {}\nmatcher = all\n{extra}", manifest.display())).unwrap();
    cfg
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

#[test]
fn evaluate_toy_set_writes_all_matcher_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), true, "");
    let out = dir.path().join("out");
    let o = facefuse(&["--config", s(&cfg), "--output", s(&out), "evaluate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        listing(&out),
        [
            "effective_config.txt",
            "report_fused.txt",
            "report_global.txt",
            "report_local.txt",
            "roc_fused.csv",
            "roc_global.csv",
            "roc_local.csv"
        ]
    );
    let roc = std::fs::read_to_string(out.join("roc_local.csv")).unwrap();
    assert!(roc.starts_with("threshold,far,frr\n"));
    let report = std::fs::read_to_string(out.join("report_fused.txt")).unwrap();
    assert_eq!(value(&report, "genuine_count"), "12");
    assert_eq!(value(&report, "impostor_count"), "36");
    assert!(report.contains("threshold_psi="));
    let effective = std::fs::read_to_string(out.join("effective_config.txt")).unwrap();
    assert!(effective.contains("matcher = all"));
}

#[test]
fn evaluate_without_training_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), false, "fusion.fit_threshold = eer\n");
    let out = dir.path().join("out");
    let o = facefuse(&["--config", s(&cfg), "--output", s(&out), "evaluate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("training"), "{}", stderr(&o));
    assert!(!out.exists(), "nothing is written before the configuration is accepted");
}

#[test]
fn evaluate_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), true, "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(facefuse(&["--config", s(&cfg), "--output", s(&a), "--jobs", "1", "evaluate"]).status.success());
    assert!(facefuse(&["--config", s(&cfg), "--output", s(&b), "--jobs", "4", "evaluate"]).status.success());
    for name in listing(&a) {
        let (x, y) = (std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
        if name == "effective_config.txt" {
            // differs only in output.dir
            continue;
        }
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn bad_config_key_fails_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "matcher = all\nsift.octavez = 3\n").unwrap();
    let o = facefuse(&["--config", s(&cfg), "evaluate"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("octavez") && err.contains('2'), "{err}");
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn glyphline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glyphline")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = glyphline(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scene_paths(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let n = p.file_name().unwrap().to_str().unwrap();
            n.ends_with(".json") && !n.contains(".truth.") && n.matches('.').count() == 1
        })
        .map(|p| p.to_str().unwrap().to_string())
        .collect();
    v.sort();
    v
}

fn manifest(files: &BTreeMap<String, Vec<u8>>) -> String {
    files
        .iter()
        .map(|(name, bytes)| format!("{name} {:x}\n", Sha256::digest(bytes)))
        .collect()
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares `actual` with a frozen golden file; `GLYPHLINE_UPDATE_GOLDEN=1`
/// rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("GLYPHLINE_UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(actual, expected, "golden {name} differs");
}

#[test]
fn pipeline_is_byte_identical_across_runs_and_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["pipeline", "--seed", "11", "--jobs", "1", "--out", path_str(&a)]);
    ok(&["pipeline", "--seed", "11", "--jobs", "8", "--out", path_str(&b)]);
    let (ca, cb) = (dir_contents(&a), dir_contents(&b));
    assert_eq!(ca.keys().collect::<Vec<_>>(), cb.keys().collect::<Vec<_>>());
    assert!(ca == cb, "artifacts differ between --jobs 1 and --jobs 8");
    for kind in [".groups.json", ".lines.json", ".strips.json", ".words.json", "_0.pgm"] {
        assert!(ca.keys().any(|k| k.ends_with(kind)), "no {kind} artifact");
    }
    check_golden("pipeline_seed11_eval.csv", std::str::from_utf8(&ca["eval.csv"]).unwrap());
    check_golden("pipeline_seed11_manifest.txt", &manifest(&ca));
}

#[test]
fn chained_stages_match_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let scenes = tmp.path().join("scenes");
    let piped = tmp.path().join("piped");
    let chained = tmp.path().join("chained");
    ok(&["synth", "--seed", "4", "--count", "3", "--out", path_str(&scenes)]);
    let inputs = scene_paths(&scenes);
    assert_eq!(inputs.len(), 3);
    let with = |cmd: &str, out: &Path| {
        let mut args = vec![cmd.to_string(), "--out".into(), path_str(out).into()];
        args.extend(inputs.iter().cloned());
        args
    };
    let run = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    run(with("pipeline", &piped));
    for stage in ["group", "fitline", "rectify", "partition", "eval"] {
        run(with(stage, &chained));
    }
    assert_eq!(dir_contents(&piped), dir_contents(&chained));
}

#[test]
fn eval_of_ground_truth_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let scenes = tmp.path().join("scenes");
    let out = tmp.path().join("eval");
    ok(&["synth", "--seed", "2", "--count", "1", "--out", path_str(&scenes)]);
    let scene_path = scenes.join("scene_000.json");
    let scene: serde_json::Value = serde_json::from_slice(&fs::read(&scene_path).unwrap()).unwrap();
    let preds: Vec<serde_json::Value> = scene["words"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| serde_json::json!({ "box": w["box"], "score": 1.0 }))
        .collect();
    let preds_path = tmp.path().join("preds.json");
    fs::write(&preds_path, serde_json::to_vec(&preds).unwrap()).unwrap();
    ok(&["eval", "--out", path_str(&out), "--preds", path_str(&preds_path), path_str(&scene_path)]);
    let csv = fs::read_to_string(out.join("eval.csv")).unwrap();
    assert!(csv.lines().all(|l| l.starts_with("scene,") || l.ends_with(",1.000000,1.000000,1.000000")), "{csv}");
}

#[test]
fn missing_input_fails_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let res = glyphline(&["pipeline", "--out", path_str(&out), path_str(&tmp.path().join("nope.json"))]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("nope.json"));
    assert!(!out.exists());

    // a missing middle-stage document also leaves nothing behind
    ok(&["synth", "--count", "1", "--out", path_str(&tmp.path().join("s"))]);
    let scene = tmp.path().join("s/scene_000.json");
    let res = glyphline(&["fitline", "--out", path_str(&out), path_str(&scene)]);
    assert!(!res.status.success());
    assert!(!out.exists());
}

#[test]
fn invalid_invocations_fail() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(!glyphline(&["frobnicate"]).status.success());
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{ not json").unwrap();
    let res = glyphline(&["synth", "--config", path_str(&cfg), "--out", path_str(&tmp.path().join("o"))]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("bad.json"));
    assert!(!glyphline(&["synth", "--iou", "0", "--out", path_str(&tmp.path().join("o"))]).status.success());
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 1, "scenes": 1}"#).unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&["synth", "--config", path_str(&cfg), "--out", path_str(&a)]);
    ok(&["synth", "--config", path_str(&cfg), "--seed", "1", "--out", path_str(&b)]);
    ok(&["synth", "--config", path_str(&cfg), "--seed", "2", "--out", path_str(&c)]);
    assert_eq!(dir_contents(&a), dir_contents(&b));
    assert_ne!(dir_contents(&a), dir_contents(&c));
    assert_eq!(dir_contents(&a).len(), 3);
}

#[test]
fn maskgen_and_simulate_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let scenes = tmp.path().join("scenes");
    let out = tmp.path().join("out");
    ok(&["synth", "--count", "2", "--out", path_str(&scenes)]);
    let inputs = scene_paths(&scenes);
    let mut args = vec!["maskgen", "--w", "0.6", "--out", path_str(&out)];
    args.extend(inputs.iter().map(String::as_str));
    ok(&args);
    let masks: serde_json::Value = serde_json::from_slice(&fs::read(out.join("scene_000.masks.json")).unwrap()).unwrap();
    assert!(!masks.as_array().unwrap().is_empty());

    ok(&["simulate", "--iters", "3", "--out", path_str(&out)]);
    let csv = fs::read_to_string(out.join("sim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("iteration,f1,mean_s\n0,"));
    assert!(out.join("scorer.json").exists());
}

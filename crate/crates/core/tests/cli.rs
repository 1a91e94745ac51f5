use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dynser(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynser"))
        .current_dir(cwd)
        .env_remove("DYNSER_CACHE_DIR")
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(cwd: &Path, dir: &str, count: usize, seed: u64) -> PathBuf {
    let o = dynser(cwd, &["gen-fixtures", "--out", dir, "--count", &count.to_string(), "--seed", &seed.to_string()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    cwd.join(dir)
}

/// Small network so the whole CLI suite stays fast.
fn write_config(cwd: &Path, manifest: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "seed": 1,
        "variant": "proposed",
        "model": {"channels": [4, 8, 16, 16], "gru_hidden": 16, "dense": 32, "cbam_reduction": 4},
        "train": {"epochs": 2, "batch_size": 16},
        "paths": {"manifest": manifest, "cache": "cache", "out": "runs"}
    });
    let path = cwd.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn wav_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir.join("clips")).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn fixtures_are_balanced_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = gen(tmp.path(), "a", 50, 42);
    let b = gen(tmp.path(), "b", 50, 42);
    let (fa, fb) = (wav_files(&a), wav_files(&b));
    assert_eq!(fa.len(), 50);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    assert_eq!(std::fs::read(a.join("manifest.csv")).unwrap(), std::fs::read(b.join("manifest.csv")).unwrap());
    let m = dynser::data::load_manifest(&a.join("manifest.csv"), None).unwrap();
    assert_eq!(m.histogram(), [10; 5]);

    let mut centroids = vec![Vec::new(); 5];
    for e in &m.entries {
        let clip = dynser::audio::read_wav(&m.resolve(e)).unwrap();
        centroids[e.label.id()].push(dynser::data::spectral_centroid(&clip));
    }
    let means: Vec<f64> = centroids.iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    for i in 0..5 {
        for j in i + 1..5 {
            assert!((means[i] - means[j]).abs() > 200.0, "classes {i} and {j}: {means:?}");
        }
    }
}

#[test]
fn large_manifest_has_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = gen(tmp.path(), "big", 250, 1);
    let m = dynser::data::load_manifest(&dir.join("manifest.csv"), None).unwrap();
    assert_eq!(m.len(), 250);
    assert_eq!(m.histogram(), [50; 5]);
}

#[test]
fn extract_caches_skips_and_reports_bad_clips() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = gen(tmp.path(), "fx", 10, 3);
    let manifest = dir.join("manifest.csv");
    let m = manifest.to_str().unwrap();

    let o = dynser(tmp.path(), &["extract", "--manifest", m]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cache = tmp.path().join("cache");
    let index = read_json(&cache.join("index.json"));
    assert_eq!(index["entries"].as_object().unwrap().len(), 10);
    let features = std::fs::read_dir(&cache).unwrap().filter(|e| {
        let p = e.as_ref().unwrap().path();
        matches!(p.extension().and_then(|x| x.to_str()), Some("mfcc" | "wave"))
    });
    assert_eq!(features.count(), 20);

    let again = dynser(tmp.path(), &["extract", "--manifest", m]);
    assert_eq!(code(&again), 0);
    assert!(stdout(&again).starts_with("0 written, 10 up to date"), "{}", stdout(&again));

    std::fs::write(&wav_files(&dir)[4], b"RIFF garbage").unwrap();
    let bad = dynser(tmp.path(), &["extract", "--manifest", m]);
    assert_eq!(code(&bad), 2);
    let out = stdout(&bad);
    assert!(out.contains("9 up to date, 1 failed"), "{out}");
}

#[test]
fn cache_dir_env_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = gen(tmp.path(), "fx", 5, 4);
    let elsewhere = tmp.path().join("elsewhere");
    let o = Command::new(env!("CARGO_BIN_EXE_dynser"))
        .current_dir(tmp.path())
        .env(dynser::data::CACHE_ENV, &elsewhere)
        .args(["--quiet", "extract", "--manifest", dir.join("manifest.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(elsewhere.join("index.json").exists());
    assert!(!tmp.path().join("cache").exists());
}

#[test]
fn train_crossvalidate_and_evaluate_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = gen(tmp.path(), "fx", 50, 42);
    let config = write_config(tmp.path(), &dir.join("manifest.csv"));
    let c = config.to_str().unwrap();

    assert_eq!(code(&dynser(tmp.path(), &["--quiet", "extract", "--config", c])), 0);

    let train = |out: &str| {
        let o = dynser(tmp.path(), &["train", "--config", c, "--out", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        tmp.path().join(out)
    };
    let r1 = train("t1");
    let r2 = train("t2");
    let report = read_json(&r1.join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "train");
    assert_eq!(report["config"]["model"]["channels"], serde_json::json!([4, 8, 16, 16]));
    assert_eq!(report["config"]["train"]["epochs"], 2);
    assert_eq!(report["seeds"], serde_json::json!([1]));
    assert_eq!(report["test_size"], 10);
    assert_eq!(report["history"]["epochs"].as_array().unwrap().len(), 2);
    let r2_report = read_json(&r2.join("report.json"));
    assert_eq!(report["metrics"], r2_report["metrics"]);
    assert_eq!(report["history"], r2_report["history"]);
    assert_eq!(std::fs::read(r1.join("checkpoint.bin")).unwrap(), std::fs::read(r2.join("checkpoint.bin")).unwrap());
    let history = std::fs::read_to_string(r1.join("history.csv")).unwrap();
    assert!(history.starts_with("fold,epoch,train_loss,test_ua,test_wa,test_f1\n"));
    assert_eq!(history.lines().count(), 3);
    assert!(r1.join("confusion.txt").exists());

    let cv = dynser(tmp.path(), &["crossvalidate", "--config", c, "--epochs", "1", "--out", "cv"]);
    assert_eq!(code(&cv), 0, "{}", String::from_utf8_lossy(&cv.stderr));
    let cv_report = read_json(&tmp.path().join("cv/cv_report.json"));
    assert_eq!(cv_report["folds"].as_array().unwrap().len(), 5);
    assert_eq!(cv_report["seeds"], serde_json::json!([1, 2, 3, 4, 5]));
    let pooled: u64 = cv_report["pooled"]["confusion"]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|row| row.as_array().unwrap().iter().map(|v| v.as_u64().unwrap()))
        .sum();
    assert_eq!(pooled, 50);

    let ckpt = r1.join("checkpoint.bin");
    let ck = ckpt.to_str().unwrap();
    let ok = dynser(tmp.path(), &["evaluate", "--config", c, "--checkpoint", ck, "--out", "ev"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let ev = read_json(&tmp.path().join("ev/eval_report.json"));
    assert_eq!(ev["samples"], 50);

    let wrong = dynser(tmp.path(), &["evaluate", "--config", c, "--variant", "one-stream-wave", "--checkpoint", ck]);
    assert_eq!(code(&wrong), 1);
    let err = String::from_utf8_lossy(&wrong.stderr);
    assert!(err.contains("proposed") && err.contains("one-stream-wave"), "{err}");
}

#[test]
fn untrained_models_score_near_chance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = gen(tmp.path(), "fx", 50, 42);
    let config = write_config(tmp.path(), &dir.join("manifest.csv"));
    let c = config.to_str().unwrap();
    assert_eq!(code(&dynser(tmp.path(), &["--quiet", "extract", "--config", c])), 0);
    let mut uas = Vec::new();
    for seed in 0..5 {
        let out = format!("u{seed}");
        let o = dynser(tmp.path(), &["--quiet", "train", "--config", c, "--epochs", "0", "--seed", &seed.to_string(), "--out", &out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        uas.push(read_json(&tmp.path().join(out).join("report.json"))["metrics"]["ua"].as_f64().unwrap());
    }
    let mean = uas.iter().sum::<f64>() / 5.0;
    assert!((0.05..=0.5).contains(&mean), "untrained UA {mean} ({uas:?})");
}

#[test]
fn usage_and_config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&dynser(tmp.path(), &["train", "--variant", "lstm"])), 1);
    assert_eq!(code(&dynser(tmp.path(), &["frobnicate"])), 1);
    assert_eq!(code(&dynser(tmp.path(), &["--version"])), 0);
    std::fs::write(tmp.path().join("bad.json"), r#"{"train": {"batch_size": 1}}"#).unwrap();
    assert_eq!(code(&dynser(tmp.path(), &["train", "--config", "bad.json"])), 1);
    let missing = dynser(tmp.path(), &["extract", "--manifest", "nope.csv"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn train_without_cache_points_at_extract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = gen(tmp.path(), "fx", 10, 2);
    let config = write_config(tmp.path(), &dir.join("manifest.csv"));
    let o = dynser(tmp.path(), &["train", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dynser extract"));
}

use std::path::Path;
use std::process::{Command, Output};

use lsem_core::io::{read_boundary_file, read_latents_file, read_scores_file};
use serde_json::Value;

fn lsem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsem"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn lsem")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = lsem(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const LAYERED_MODEL: &str = r#"{
  "dim": 8,
  "attributes": [{"name": "pose", "lambda": 1.0}, {"name": "smile", "lambda": 2.0}],
  "seed": 1,
  "layer_groups": {"layers": 18, "groups": [[0,2],[2,4],[4,6],[6,8],[8,18]], "owner": {"pose": 0, "smile": 2}}
}"#;

#[test]
fn verify_property2_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["verify", "property2", "--dim", "512", "--alpha", "2", "--samples", "100000", "--seed", "7"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "concentration");
    assert_eq!(v["provenance"]["seed"], 7);
    assert!(v["report"]["empirical"].as_f64().unwrap() >= 0.8647);
    assert_eq!(v["report"]["passed"], true);
}

#[test]
fn sample_writes_codes_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["sample", "--dim", "16", "--count", "250", "--seed", "3", "--out", "z.lsdf"]);
    let codes = read_latents_file(dir.path().join("z.lsdf")).unwrap();
    assert_eq!(codes.len(), 250);
    assert_eq!(codes[0].dim(), 16);
    let meta = json(&dir.path().join("z.lsdf.meta.json"));
    assert_eq!(meta["provenance"]["seed"], 3);
    assert_eq!(meta["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["--threads", "1", "sample", "--dim", "32", "--count", "25000", "--seed", "9", "--out", "a.lsdf"]);
    ok(p, &["sample", "--dim", "32", "--count", "25000", "--seed", "9", "--out", "b.lsdf", "--threads", "4"]);
    assert_eq!(std::fs::read(p.join("a.lsdf")).unwrap(), std::fs::read(p.join("b.lsdf")).unwrap());
    let a = json(&p.join("a.lsdf.meta.json"));
    let b = json(&p.join("b.lsdf.meta.json"));
    assert_eq!(a["provenance"], b["provenance"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(lsem(p, &["sample", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(lsem(p, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(lsem(p, &["report"]).status.code(), Some(1));
    assert_eq!(lsem(p, &["--help"]).status.code(), Some(0));

    let missing = lsem(p, &["correlate", "--scores", "missing.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.csv"));

    std::fs::write(p.join("bad.lsdf"), b"LSDF garbage").unwrap();
    assert_eq!(lsem(p, &["identity", "--in", "bad.lsdf", "--boundary", "b.json"]).status.code(), Some(1));
    ok(p, &["sample", "--dim", "4", "--count", "3", "--out", "z.lsdf"]);
    assert_eq!(lsem(p, &["identity", "--in", "z.lsdf", "--boundary", "b.json"]).status.code(), Some(2));
    std::fs::write(p.join("b.json"), "{}").unwrap();
    assert_eq!(lsem(p, &["identity", "--in", "z.lsdf", "--boundary", "b.json"]).status.code(), Some(1));

    assert_eq!(lsem(p, &["verify", "property2", "--dim", "3", "--alpha", "2"]).status.code(), Some(1));
    assert_eq!(lsem(p, &["sample", "--dim", "4", "--count", "2", "--space", "W", "--out", "w.lsdf"]).status.code(), Some(1));
}

#[test]
fn train_project_edit_round() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("model.json"),
        r#"{"dim": 16, "attributes": [{"name": "age", "lambda": 1.0}, {"name": "glasses", "lambda": 1.5}],
            "correlations": [[1.0, 0.6], [0.6, 1.0]], "seed": 4}"#,
    )
    .unwrap();
    ok(p, &["sample", "--dim", "16", "--count", "4000", "--seed", "1", "--out", "z.lsdf"]);
    ok(p, &["oracle-score", "--model", "model.json", "--in", "z.lsdf", "--out", "s.csv", "--emit-truth", "truth"]);
    assert_eq!(read_scores_file(p.join("s.csv")).unwrap().attributes, ["age", "glasses"]);
    ok(p, &["train", "--in", "z.lsdf", "--scores", "s.csv", "--attribute", "glasses", "--candidate-fraction", "0.1", "--out", "g.json", "--report", "train.json"]);
    assert!(json(&p.join("train.json"))["report"]["accuracy"]["val_accuracy"].as_f64().unwrap() >= 0.95);

    ok(p, &["project", "--boundary", "truth/glasses.json", "--conditions", "truth/age.json", "--out", "gc.json"]);
    let projected = read_boundary_file(p.join("gc.json")).unwrap();
    let age = read_boundary_file(p.join("truth/age.json")).unwrap();
    let dot: f64 = projected.normal().iter().zip(age.normal()).map(|(a, b)| a * b).sum();
    assert!(dot.abs() < 1e-12);

    let dup = lsem(p, &["project", "--boundary", "truth/age.json", "--conditions", "truth/age.json", "--out", "x.json"]);
    assert_eq!(dup.status.code(), Some(1));

    ok(p, &["edit", "--in", "z.lsdf", "--boundary", "truth/glasses.json", "--conditions", "truth/age.json", "--alpha", "-2.5", "--out", "z2.lsdf"]);
    let before = read_latents_file(p.join("z.lsdf")).unwrap();
    let after = read_latents_file(p.join("z2.lsdf")).unwrap();
    for (a, b) in before.iter().zip(&after).take(50) {
        let delta: Vec<f64> = b.values().iter().zip(a.values()).map(|(x, y)| x - y).collect();
        let along_age: f64 = delta.iter().zip(age.normal()).map(|(d, n)| d * n).sum();
        assert!(along_age.abs() < 1e-5, "f32 storage bounds the error");
    }
    assert!(p.join("z2.lsdf.meta.json").exists());

    ok(p, &["rescore", "--model", "model.json", "--in", "z.lsdf", "--alpha", "1", "--out", "r.json"]);
    ok(p, &["correlate", "--scores", "s.csv", "--out", "c.json"]);
    ok(p, &["correlate", "--boundaries", "truth/age.json,truth/glasses.json", "--out", "cb.json"]);
    let cb = json(&p.join("cb.json"));
    assert!((cb["report"]["values"][0][1].as_f64().unwrap() - 0.6).abs() < 1e-9);

    let out = ok(p, &["report", "r.json", "c.json", "cb.json", "train.json", "--csv", "all.csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("== r.json =="));
    assert!(text.contains("training glasses"));
    let csv = std::fs::read_to_string(p.join("all.csv")).unwrap();
    assert!(csv.starts_with("file,kind,row,column,value\n"));
    assert!(csv.contains("r.json,rescoring,age,glasses,"));
}

#[test]
fn layered_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("model.json"), LAYERED_MODEL).unwrap();
    ok(p, &["sample", "--dim", "8", "--count", "40", "--space", "WPlus", "--seed", "2", "--out", "w.lsdf"]);
    let codes = read_latents_file(p.join("w.lsdf")).unwrap();
    assert_eq!(codes[0].layers(), 18);
    assert_eq!(codes[0].layer(0), codes[0].layer(17));

    ok(p, &["oracle-score", "--model", "model.json", "--in", "w.lsdf", "--out", "s.csv", "--emit-truth", "truth"]);
    ok(p, &["layerwise", "--model", "model.json", "--in", "w.lsdf", "--alpha", "3", "--out", "lw.json"]);
    let lw = json(&p.join("lw.json"));
    let cols = lw["report"]["columns"].as_array().unwrap();
    assert_eq!(cols.len(), 6);
    let smile = lw["report"]["values"][1].as_array().unwrap();
    for (c, v) in smile.iter().enumerate() {
        let v = v.as_f64().unwrap();
        if c == 2 || c == 5 {
            assert!((v - 6.0).abs() < 1e-9);
        } else {
            assert!(v.abs() < 1e-9);
        }
    }

    ok(p, &["edit", "--in", "w.lsdf", "--boundary", "truth/smile.json", "--alpha", "1", "--layers", "8-17", "--out", "e.lsdf"]);
    let edited = read_latents_file(p.join("e.lsdf")).unwrap();
    assert_eq!(edited[0].layer(0), codes[0].layer(0));
    assert_ne!(edited[0].layer(8), codes[0].layer(8));

    ok(p, &["rescore", "--model", "model.json", "--in", "w.lsdf", "--alpha", "1", "--out", "r.json"]);
    let r = json(&p.join("r.json"));
    assert!((r["report"]["values"][1][1].as_f64().unwrap() - 2.0).abs() < 1e-9);

    assert_eq!(
        lsem(p, &["edit", "--in", "w.lsdf", "--boundary", "truth/smile.json", "--alpha", "1", "--layers", "30", "--out", "x.lsdf"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn identity_report_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("model.json"), r#"{"dim": 512, "attributes": [{"name": "age", "lambda": 1.0}]}"#).unwrap();
    ok(p, &["sample", "--dim", "512", "--count", "30", "--seed", "5", "--out", "z.lsdf"]);
    ok(p, &["oracle-score", "--model", "model.json", "--in", "z.lsdf", "--out", "s.csv", "--emit-truth", "t"]);
    ok(p, &["identity", "--in", "z.lsdf", "--boundary", "t/age.json", "--alphas", "0.5,1,2", "--out", "id.json"]);
    let v = json(&p.join("id.json"));
    assert_eq!(v["report"]["nondecreasing"], true);
    assert_eq!(v["report"]["discrepancy"].as_array().unwrap().len(), 3);
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for name in ["a.json", "b.json"] {
        ok(p, &["verify", "annulus", "--dim", "64", "--beta", "2", "--samples", "20000", "--seed", "1", "--out", name]);
    }
    assert_eq!(std::fs::read(p.join("a.json")).unwrap(), std::fs::read(p.join("b.json")).unwrap());
    let out = ok(p, &["report", "a.json"]);
    let line = String::from_utf8(out.stdout).unwrap();
    assert!(line.starts_with("PASS Annulus") || line.starts_with("FAIL Annulus"));
    assert_eq!(line.lines().count(), 1);
}

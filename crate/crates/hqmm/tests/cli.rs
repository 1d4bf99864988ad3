use std::path::Path;
use std::process::{Command, Output};

use hqmm::model_file::save_model;
use hqmm_core::models::{Hmm, ModelSpec};
use serde_json::Value;

fn hqmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqmm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = hqmm(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_train_validate_eval() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.txt");
    let val = dir.path().join("val.txt");
    let run = dir.path().join("run.json");
    let gen = ok_json(&[
        "generate",
        "--generator",
        "random-hmm(3,3,4)",
        "--sequences",
        "4",
        "--length",
        "200",
        "--seed",
        "1",
        "--val-sequences",
        "2",
        "--val-out",
        p(&val),
        "--sub-length",
        "100",
        "--burn-in",
        "10",
        "--out",
        p(&train),
    ]);
    assert_eq!(gen["outputs"][0]["sequences"], 8);
    assert_eq!(gen["outputs"][1]["sequences"], 4);

    let trained = ok_json(&[
        "train",
        "--data",
        p(&train),
        "--val",
        p(&val),
        "--arch",
        "2,3,1",
        "--epochs",
        "3",
        "--batch-size",
        "4",
        "--out",
        p(&run),
    ]);
    assert_eq!(trained["epochs"], 3);
    assert!(trained["max_feasibility"].as_f64().unwrap() < 1e-8);
    assert!(dir.path().join("run.best.json").exists());

    let report = ok_json(&["validate", p(&dir.path().join("run.best.json"))]);
    assert_eq!(report["valid"], true);
    assert!(report["tp_residual"].as_f64().unwrap() < 1e-8);

    let da = ok_json(&["eval", "--run", p(&run), "--data", p(&val)]);
    assert_eq!(da["burn_in"], 10);
    assert_eq!(da["sequences"], 4);
    let best = trained["best_validation_da"].as_f64().unwrap();
    assert!((da["mean"].as_f64().unwrap() - best).abs() < 1e-12);
}

#[test]
fn zero_epochs_is_initialization_only() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    let run = dir.path().join("r.json");
    ok_json(&[
        "generate",
        "--generator",
        "random-hmm(2,2,0)",
        "--sequences",
        "3",
        "--length",
        "50",
        "--out",
        p(&data),
    ]);
    let args = [
        "train",
        "--data",
        p(&data),
        "--arch",
        "2,2,1",
        "--epochs",
        "0",
        "--seed",
        "9",
        "--out",
        p(&run),
    ];
    let a = ok_json(&args);
    assert_eq!(a["epochs"], 0);
    assert_eq!(a["best_epoch"], 0);
    let first = std::fs::read_to_string(dir.path().join("r.best.json")).unwrap();
    ok_json(&args);
    assert_eq!(first, std::fs::read_to_string(dir.path().join("r.best.json")).unwrap());
}

#[test]
fn uniform_model_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("uniform.json");
    let data = dir.path().join("d.txt");
    save_model(&model, &ModelSpec::Hmm(Hmm::uniform(2, 4))).unwrap();
    ok_json(&[
        "generate",
        "--generator",
        "random-hmm(3,4,1)",
        "--sequences",
        "5",
        "--length",
        "40",
        "--out",
        p(&data),
    ]);
    let da = ok_json(&["eval", "--model", p(&model), "--data", p(&data)]);
    assert!(da["mean"].as_f64().unwrap().abs() < 1e-12);
    let ll = ok_json(&["eval", "--model", p(&model), "--data", p(&data), "--metric", "loglik"]);
    let expected = -200.0 * 4f64.ln();
    assert!((ll["total"].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn convert_hmm_to_hqmm_and_back_to_oom() {
    let dir = tempfile::tempdir().unwrap();
    let hmm = dir.path().join("hmm.json");
    let q = dir.path().join("q.json");
    let oom = dir.path().join("oom.json");
    let data = dir.path().join("d.txt");
    save_model(&hmm, &ModelSpec::Hmm(Hmm::random(3, 2, 8).unwrap())).unwrap();
    let c = ok_json(&["convert", "--model", p(&hmm), "--to", "khqmm", "--out", p(&q)]);
    assert_eq!(c["to"], "khqmm");
    assert_eq!(ok_json(&["validate", p(&q)])["valid"], true);
    ok_json(&["convert", "--model", p(&q), "--to", "standard-oom", "--out", p(&oom)]);
    assert_eq!(ok_json(&["validate", p(&oom), "--depth", "4"])["violations"], 0);

    ok_json(&[
        "generate",
        "--model",
        p(&hmm),
        "--sequences",
        "3",
        "--length",
        "30",
        "--out",
        p(&data),
    ]);
    let score = |m: &Path| {
        ok_json(&["eval", "--model", p(m), "--data", p(&data), "--metric", "loglik"])["total"]
            .as_f64()
            .unwrap()
    };
    let reference = score(&hmm);
    assert!((score(&q) - reference).abs() < 1e-9);
    assert!((score(&oom) - reference).abs() < 1e-9);
}

#[test]
fn speedup_from_csv_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let baseline = dir.path().join("b.csv");
    let target = dir.path().join("t.csv");
    let rows = |f: &dyn Fn(f64) -> f64, n: usize| -> String {
        let mut s = String::from("seconds,da\n");
        for i in 0..=n {
            s += &format!("{},{}\n", i as f64, f(i as f64));
        }
        s
    };
    std::fs::write(&baseline, rows(&|t| 0.01 * t, 100)).unwrap();
    std::fs::write(&target, rows(&|t| (0.1 * t).min(0.5), 20)).unwrap();
    let e = ok_json(&[
        "speedup",
        "--baseline",
        p(&baseline),
        "--target",
        p(&target),
        "--fraction",
        "1.0",
    ]);
    assert!((e["speedup"].as_f64().unwrap() - 10.0).abs() < 0.01);
    assert_eq!(e["extrapolated"], false);
}

#[test]
fn usage_and_runtime_errors() {
    assert_eq!(hqmm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hqmm(&["eval", "--no-such-flag"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = hqmm(&["validate", p(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");

    let data = dir.path().join("d.txt");
    ok_json(&[
        "generate",
        "--generator",
        "random-hmm(2,3,0)",
        "--sequences",
        "2",
        "--length",
        "20",
        "--out",
        p(&data),
    ]);
    let out = hqmm(&[
        "train",
        "--data",
        p(&data),
        "--arch",
        "2,2,1",
        "--out",
        p(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

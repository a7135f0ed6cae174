use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bsvm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsvm"))
        .args(args)
        .current_dir(dir)
        .env("BSVM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Two shifted clusters with a categorical column and string labels.
fn write_dataset(path: &Path, n_major: usize, n_minor: usize) {
    let mut text = String::from("x1,color,x2,y\n");
    for i in 0..n_major {
        let t = i as f64;
        let x1 = (t * 0.37).sin() * 0.9;
        let x2 = 1.5 + (t * 0.71).cos() * 0.9;
        let color = if i % 2 == 0 { "red" } else { "blue" };
        text += &format!("{x1},{color},{x2},no\n");
    }
    for i in 0..n_minor {
        let t = i as f64;
        let x1 = 2.0 + (t * 0.53).sin() * 0.6;
        let x2 = -0.5 + (t * 0.29).cos() * 0.6;
        text += &format!("{x1},red,{x2},yes\n");
    }
    fs::write(path, text).unwrap();
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("train.csv"), 60, 15);
    fs::write(dir.path().join("new.csv"), "x1,color,x2\n2.1,red,-0.4\n0.0,blue,1.6\n").unwrap();
    dir
}

#[test]
fn train_then_predict_round_trip() {
    let dir = workspace();
    let p = dir.path();
    let out = bsvm(
        p,
        &["train", "--data", "train.csv", "--kernel", "linear", "--out", "m.json", "--trace", "t.jsonl", "--test-ratio", "0.2"],
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["variant"], "proposed");
    assert_eq!(summary["positive_label"], "yes");
    assert!(summary["test_metrics"]["accuracy"].as_f64().unwrap() > 0.9);
    assert!(summary["n_support"].as_u64().unwrap() >= 2);

    let trace = fs::read_to_string(p.join("t.jsonl")).unwrap();
    assert!(trace.lines().count() >= 1);
    for line in trace.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert!(rec["iteration"].is_u64());
    }

    let pred = bsvm(p, &["predict", "--model", "m.json", "--data", "new.csv"]);
    assert!(pred.status.success());
    let text = String::from_utf8(pred.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,decision");
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("-1,"));
}

#[test]
fn repeated_training_is_byte_identical() {
    let dir = workspace();
    let p = dir.path();
    for out in ["a.json", "b.json"] {
        let run = bsvm(p, &["train", "--data", "train.csv", "--variant", "soft_margin", "--out", out]);
        assert!(run.status.success());
    }
    assert_eq!(fs::read(p.join("a.json")).unwrap(), fs::read(p.join("b.json")).unwrap());
}

#[test]
fn predict_on_header_only_file_writes_header_only() {
    let dir = workspace();
    let p = dir.path();
    assert!(bsvm(p, &["train", "--data", "train.csv", "--out", "m.json"]).status.success());
    fs::write(p.join("empty.csv"), "x1,color,x2\n").unwrap();
    let out = bsvm(p, &["predict", "--model", "m.json", "--data", "empty.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "label,decision");
}

#[test]
fn permuted_columns_are_a_data_error() {
    let dir = workspace();
    let p = dir.path();
    assert!(bsvm(p, &["train", "--data", "train.csv", "--out", "m.json"]).status.success());
    fs::write(p.join("perm.csv"), "x2,color,x1\n1,red,0\n").unwrap();
    let out = bsvm(p, &["predict", "--model", "m.json", "--data", "perm.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = workspace();
    let p = dir.path();
    assert_eq!(bsvm(p, &["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(bsvm(p, &["train", "--data", "train.csv", "--variant", "nope"]).status.code(), Some(1));
    assert_eq!(bsvm(p, &["train", "--data", "train.csv", "--C", "-1"]).status.code(), Some(1));
    assert_eq!(bsvm(p, &["train", "--data", "train.csv", "--weights", "+1:2"]).status.code(), Some(1));
    assert_eq!(bsvm(p, &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_is_a_data_error() {
    let dir = workspace();
    assert_eq!(bsvm(dir.path(), &["train", "--data", "absent.csv"]).status.code(), Some(2));
}

#[test]
fn infeasible_nu_is_a_solver_error() {
    let dir = workspace();
    let out = bsvm(dir.path(), &["train", "--data", "train.csv", "--variant", "nu_svc", "--nu", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(message.contains("= 0.4"), "{message}");
}

#[test]
fn separable_training_set_is_reproduced() {
    let dir = workspace();
    let p = dir.path();
    let summary = stdout_json(&bsvm(p, &["train", "--data", "train.csv", "--kernel", "linear", "--out", "m.json"]));
    assert_eq!(summary["train_metrics"]["accuracy"], 1.0);

    let pred = bsvm(p, &["predict", "--model", "m.json", "--data", "train.csv"]);
    assert!(pred.status.success(), "{}", String::from_utf8_lossy(&pred.stderr));
    let text = String::from_utf8(pred.stdout).unwrap();
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let expected: Vec<&str> = fs::read_to_string(p.join("train.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| if l.ends_with("yes") { "1" } else { "-1" })
        .collect();
    assert_eq!(labels, expected);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("cfg.json"), r#"{"data": "train.csv", "variant": "weighted", "kernel": "linear", "C": 2.0}"#).unwrap();
    let from_file = stdout_json(&bsvm(p, &["--config", "cfg.json", "train"]));
    assert_eq!(from_file["variant"], "weighted");
    let overridden = stdout_json(&bsvm(p, &["--config", "cfg.json", "train", "--variant", "soft_margin"]));
    assert_eq!(overridden["variant"], "soft_margin");

    fs::write(p.join("bad.json"), r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(bsvm(p, &["--config", "bad.json", "train"]).status.code(), Some(1));
}

#[test]
fn complexity_reports_n1() {
    let dir = workspace();
    let report = stdout_json(&bsvm(dir.path(), &["complexity", "--data", "train.csv"]));
    let n1 = report["n1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&n1));
    assert_eq!(report["n_samples"], 75);
    assert_eq!(report["mst_edge_count"], 74);
}

#[test]
fn benchmark_writes_report_files() {
    let dir = workspace();
    let p = dir.path();
    write_dataset(&p.join("second.csv"), 50, 20);
    fs::write(
        p.join("manifest.json"),
        r#"{"datasets": [{"name": "first", "path": "train.csv"}, {"path": "second.csv", "objective": "accuracy"}]}"#,
    )
    .unwrap();
    let out = bsvm(
        p,
        &["benchmark", "--manifest", "manifest.json", "--kernel", "linear", "--variants", "soft_margin,proposed", "--out", "rep"],
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["rows"], 4);
    assert_eq!(summary["wilcoxon"].as_array().unwrap().len(), 1);
    for file in ["report.json", "metrics.csv", "timing.csv", "wilcoxon.csv"] {
        assert!(p.join("rep").join(file).exists(), "{file} missing");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(p.join("rep/report.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    for row in rows {
        assert_eq!(row["status"], "ok");
        assert!(row["test_score"].is_number());
        assert!(row["predict_time_per_sample_s"].as_f64().unwrap() > 0.0);
    }

    // a rerun with the same seed differs only in wall-clock fields
    let again = bsvm(
        p,
        &["benchmark", "--manifest", "manifest.json", "--kernel", "linear", "--variants", "soft_margin,proposed", "--out", "rep2"],
    );
    assert!(again.status.success());
    let strip = |dir: &str| {
        let mut v: Value = serde_json::from_str(&fs::read_to_string(p.join(dir).join("report.json")).unwrap()).unwrap();
        for row in v["rows"].as_array_mut().unwrap() {
            row["train_time_s"] = Value::Null;
            row["predict_time_per_sample_s"] = Value::Null;
        }
        v
    };
    assert_eq!(strip("rep"), strip("rep2"));
}

#[test]
fn benchmark_with_only_broken_datasets_fails() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("manifest.json"), r#"{"datasets": [{"path": "absent.csv"}]}"#).unwrap();
    let out = bsvm(p, &["benchmark", "--manifest", "manifest.json", "--kernel", "linear", "--out", "rep"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn n1_threshold_excludes_easy_datasets() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("manifest.json"), r#"{"datasets": [{"path": "train.csv"}]}"#).unwrap();
    let out = bsvm(
        p,
        &["benchmark", "--manifest", "manifest.json", "--kernel", "linear", "--n1-threshold", "0.99", "--out", "rep"],
    );
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_str(&fs::read_to_string(p.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(report["datasets"][0]["excluded"], true);
}

#[test]
fn compare_pairs_scores_by_seed() {
    let dir = workspace();
    let p = dir.path();
    let out = bsvm(
        p,
        &["compare", "--data", "train.csv", "--kernel", "linear", "--repeats", "3", "--variants", "soft_margin,proposed", "--out", "cmp"],
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["seeds"], serde_json::json!([42, 43, 44]));
    assert_eq!(summary["scores"]["proposed"].as_array().unwrap().len(), 3);
    let tests = summary["wilcoxon"].as_array().unwrap();
    assert_eq!(tests.len(), 1);
    assert_eq!(tests[0]["baseline"], "soft_margin");
}

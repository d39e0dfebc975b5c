mod common;

use actpred::cluster::read_model;
use actpred::corpus::{DatasetSplit, UserRecord};
use actpred::io::read_jsonl;
use actpred::predict::Checkpoint;
use common::{cli, cli_ok, read_report, run_pipeline, snapshot};

#[test]
fn full_pipeline_on_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path();
    run_pipeline(wd, 7, 120, 6, 15);

    let report = read_report(&wd.join("report.csv"));
    assert!(report.contains_key("full"));
    assert!((report["rand"]["acc@1"] - 16.67).abs() < 1e-9);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(wd.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"][0]["variant"], "full");

    let split: DatasetSplit = serde_json::from_str(&std::fs::read_to_string(wd.join("splits.json")).unwrap()).unwrap();
    let labeled: Vec<UserRecord> = read_jsonl(&wd.join("labeled.jsonl")).unwrap();
    assert_eq!(split.train.len() + split.dev.len() + split.test.len(), labeled.len());
    assert!(labeled.iter().all(|u| !u.target_labels.is_empty() && u.additional_activities.len() >= 5));

    let model = read_model(&wd.join("clusters.model")).unwrap();
    assert_eq!(model.k, 6);
    let cp: Checkpoint = serde_json::from_str(&std::fs::read_to_string(wd.join("model-full.json")).unwrap()).unwrap();
    assert_eq!(cp.model.config.epochs, 15);
    let log = std::fs::read_to_string(wd.join("trainlog-full.csv")).unwrap();
    assert_eq!(log.lines().count(), 16);
    assert!(std::fs::read_to_string(wd.join("validity.csv")).unwrap().starts_with("k,"));
    assert!(std::fs::read_to_string(wd.join("cluster_values.tsv")).unwrap().starts_with("value\trank"));
}

#[test]
fn ablations_train_and_evaluate_together() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path();
    run_pipeline(wd, 3, 100, 4, 5);
    cli_ok(wd, &["train", "--epochs", "5", "--no-history", "--name", "noh"]);
    cli_ok(wd, &["train", "--epochs", "5", "--no-attributes", "--no-profile", "--history", "activities", "--name", "h"]);
    cli_ok(wd, &["train", "--epochs", "5", "--task", "top:2", "--name", "top2"]);
    cli_ok(wd, &["eval", "--model", "full", "--model", "noh", "--model", "h", "--ks", "1,2"]);
    let table: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(wd.join("report.json")).unwrap()).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 4);
    let cp: Checkpoint = serde_json::from_str(&std::fs::read_to_string(wd.join("model-top2.json")).unwrap()).unwrap();
    assert_eq!(cp.classes.dim_o(), 2);
}

#[test]
fn stages_are_rerunnable_and_leave_inputs_alone() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path();
    run_pipeline(wd, 11, 80, 4, 3);
    let before = snapshot(wd);
    cli_ok(wd, &["--seed", "11", "extract"]);
    cli_ok(wd, &["--seed", "11", "embed"]);
    cli_ok(wd, &["--seed", "11", "cluster", "fit", "--k", "4"]);
    cli_ok(wd, &["--seed", "11", "label"]);
    cli_ok(wd, &["--seed", "11", "train", "--epochs", "3"]);
    cli_ok(wd, &["--seed", "11", "eval"]);
    assert_eq!(before, snapshot(wd));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path();
    assert_eq!(cli(wd, &["nonsense"]), 2);
    assert_eq!(cli(wd, &["extract"]), 3);
    assert_eq!(cli(wd, &["train"]), 3);
    cli_ok(wd, &["synth", "--users", "20", "--clusters", "3"]);
    cli_ok(wd, &["queries"]);
    // All users fail the thresholds, so clustering has nothing to work on.
    cli_ok(wd, &["extract", "--min-tweets", "1000"]);
    cli_ok(wd, &["embed"]);
    assert_eq!(cli(wd, &["cluster", "fit", "--k", "3"]), 1);
}

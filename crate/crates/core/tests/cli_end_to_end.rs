//! synth → train → eval → report through the installed binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn breathid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breathid")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = breathid(args);
    assert!(
        out.status.success(),
        "breathid {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_TCN: [&str; 14] = [
    "--arch",
    "tcn",
    "--stage1-filters",
    "4",
    "--stage2-filters",
    "8",
    "--tcn-kernel",
    "3",
    "--batch-size",
    "16",
    "--max-epochs",
    "2",
    "--lr",
    "0.003",
];

#[test]
fn pipeline_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let table = ok(&[
        "synth", "--out", s(&data), "--subjects", "6", "--seed", "3", "--min-count", "11", "--max-count", "12",
        "--types", "normal",
    ]);
    assert_eq!(table.lines().count(), 1 + 6 + 1);
    assert!(table.lines().last().unwrap().contains("instances written to"));
    assert!(table.starts_with("subject\tnormal\ttotal"));

    let run = tmp.path().join("run");
    let mut train = vec!["train", "--data", s(&data), "--out", s(&run), "--seed", "4"];
    train.extend(SMALL_TCN);
    ok(&train);
    for f in ["split.json", "history.json", "model.json", "metrics.json", "summary.csv", "scores_scenario1.csv"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }

    let model = run.join("model.json");
    let eval = tmp.path().join("eval");
    let mut args = vec!["eval", "--data", s(&data), "--out", s(&eval), "--seed", "4", "--checkpoint", s(&model)];
    args.push("--export-embeddings");
    ok(&args);
    let emb = fs::read_to_string(eval.join("embeddings.csv")).unwrap();
    let header: Vec<&str> = emb.lines().next().unwrap().split(',').collect();
    // subject, instance, then one column per stage-2 channel
    assert_eq!(header.len(), 2 + 8);
    let rows = emb.lines().count() - 1;
    assert!((6 * 11..=6 * 12).contains(&rows), "{rows} embedding rows");
    assert!(emb.lines().all(|l| l.split(',').count() == 10));
    let train_metrics = fs::read_to_string(run.join("metrics.json")).unwrap();
    let eval_metrics = fs::read_to_string(eval.join("metrics.json")).unwrap();
    assert_eq!(train_metrics, eval_metrics);

    let held = tmp.path().join("held");
    let mut train = vec!["train", "--data", s(&data), "--out", s(&held), "--seed", "4", "--held-out"];
    train.extend(SMALL_TCN);
    ok(&train);
    assert!(held.join("scores_scenario2.csv").is_file());

    let report = tmp.path().join("report.md");
    let text = ok(&[
        "report",
        s(&run.join("summary.csv")),
        s(&held.join("summary.csv")),
        "--out",
        s(&report),
    ]);
    assert_eq!(fs::read_to_string(&report).unwrap(), text);
    assert!(text.contains("## Identification accuracy: tcn"));
    assert!(text.contains("## EER, scenario 2 (unseen impostors): tcn"));
    assert!(text.contains("| normal |"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("none");
    assert_eq!(breathid(&["train", "--data", s(&missing), "--out", s(tmp.path())]).status.code(), Some(3));
    assert_eq!(breathid(&["synth", "--out", s(&missing), "--subjects", "1"]).status.code(), Some(2));
    assert_eq!(breathid(&["bogus"]).status.code(), Some(2));
    assert_eq!(breathid(&["--help"]).status.code(), Some(0));
}

use std::path::Path;
use std::process::{Command, Output};

use gridcomp_core::episodes::Episode;
use gridcomp_core::jsonl;
use gridcomp_core::metrics::PredictionRecord;

fn gridcomp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridcomp"))
        .args(args)
        .env("GRIDCOMP_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gridcomp(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--n", "20", "--output", "a.jsonl", "--seed", "7"]);
    ok(dir.path(), &["gen", "--n", "20", "--output", "b.jsonl", "--seed", "7"]);
    ok(dir.path(), &["gen", "--n", "20", "--output", "c.jsonl", "--seed", "8"]);
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
}

#[test]
fn solver_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--n", "30", "--setup", "three-shot"]);
    ok(d, &["solve", "--output", "solved.jsonl"]);
    ok(d, &["score", "--predictions", "solved.jsonl"]);
    let r = report(d, "report.json");
    for key in ["exact_match", "color_acc", "shape_acc"] {
        assert_eq!(r[key].as_f64(), Some(1.0), "{key}: {r}");
    }
}

#[test]
fn copying_the_input_is_classified_as_no_transformation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--n", "10"]);
    let episodes: Vec<Episode> = jsonl::read_all(&d.join("episodes.jsonl")).unwrap();
    let preds: Vec<PredictionRecord> = episodes
        .iter()
        .flat_map(|e| {
            e.queries.iter().enumerate().map(|(qi, q)| PredictionRecord {
                episode_id: e.id.clone(),
                query_index: qi,
                prediction: Some(q.input),
                raw: None,
            })
        })
        .collect();
    jsonl::write_all(&d.join("copy.jsonl"), &preds).unwrap();
    ok(d, &["score", "--predictions", "copy.jsonl"]);
    let r = report(d, "report.json");
    assert_eq!(r["exact_match"].as_f64(), Some(0.0));
    let total = r["errors"]["total"].as_u64().unwrap();
    assert_eq!(total, preds.len() as u64);
    assert_eq!(r["errors"]["counts"]["no_transformation"].as_u64(), Some(total));
    ok(d, &["classify-errors", "--predictions", "copy.jsonl"]);
    let lines: Vec<serde_json::Value> = jsonl::read_all(&d.join("errors.jsonl")).unwrap();
    assert_eq!(lines.len(), preds.len());
    assert!(lines.iter().all(|l| l["category"] == "no_transformation"));
}

#[test]
fn split_writes_three_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--n", "200", "--setup", "three-shot"]);
    ok(d, &["split"]);
    let count = |f: &str| jsonl::read_all::<Episode>(&d.join(f)).unwrap().len();
    assert_eq!(count("train.jsonl") + count("val.jsonl") + count("test.jsonl"), 200);
    assert!(d.join("split.json").exists());
}

#[test]
fn prompts_and_parsing_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--n", "2", "--setup", "three-shot"]);
    ok(d, &["prompt", "--image"]);
    let prompts: Vec<serde_json::Value> = jsonl::read_all(&d.join("prompts.jsonl")).unwrap();
    assert_eq!(prompts.len(), 20);
    assert!(Path::new(prompts[0]["image"].as_str().unwrap()).exists());
    let episodes: Vec<Episode> = jsonl::read_all(&d.join("episodes.jsonl")).unwrap();
    let responses: Vec<serde_json::Value> = episodes
        .iter()
        .flat_map(|e| {
            e.queries.iter().enumerate().map(|(qi, q)| {
                serde_json::json!({
                    "episode_id": e.id,
                    "query_index": qi,
                    "raw": format!("Reasoning...\noutput: {}", q.output.to_array_string()),
                })
            })
        })
        .collect();
    jsonl::write_all(&d.join("responses.jsonl"), &responses).unwrap();
    ok(d, &["parse"]);
    ok(d, &["score"]);
    assert_eq!(report(d, "report.json")["exact_match"].as_f64(), Some(1.0));
}

#[test]
fn render_prints_grids() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--n", "1"]);
    let text = ok(d, &["render"]);
    assert!(!text.is_empty());
    ok(d, &["render", "--style", "svg", "--output", "q.svg"]);
    assert!(std::fs::read_to_string(d.join("q.svg")).unwrap().contains("<svg"));
}

#[test]
fn user_errors_exit_with_one_and_a_json_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridcomp(dir.path(), &["score", "--episodes", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(rec["exit_code"], 1);
    assert_eq!(rec["error"], "user");
    assert!(rec["message"].as_str().unwrap().contains("missing.jsonl"));

    let out = gridcomp(dir.path(), &["gen", "--mode", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(rec["error"], "usage");

    let out = gridcomp(dir.path(), &["gen", "--setup", "three-shot", "--ablate", "no-level1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridcomp(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("score"));
}

#[test]
fn tiny_training_run_writes_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--n", "4", "--setup", "three-shot", "--output", "train.jsonl"]);
    ok(d, &["gen", "--n", "1", "--setup", "three-shot", "--output", "val.jsonl", "--seed", "2"]);
    let args = ["train", "--epochs", "1", "--d-model", "16", "--heads", "2", "--layers", "1", "--ff-dim", "32", "--batch-episodes", "2"];
    ok(d, &args);
    assert!(d.join("checkpoints/last.ckpt").exists());
    let metrics = std::fs::read_to_string(d.join("checkpoints/metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 1);
    ok(d, &["train", "--resume", "checkpoints/last.ckpt", "--epochs", "2"]);
    let metrics = std::fs::read_to_string(d.join("checkpoints/metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 2);
    ok(d, &["eval-model", "--checkpoint", "checkpoints/last.ckpt", "--episodes", "val.jsonl"]);
    let preds: Vec<PredictionRecord> = jsonl::read_all(&d.join("predictions.jsonl")).unwrap();
    assert_eq!(preds.len(), 10);
}

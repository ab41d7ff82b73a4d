//! Black-box tests of the `framefill` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_framefill"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.txt");
    let mut lines = Vec::new();
    for _ in 0..30 {
        lines.push("pour the water to the cup");
        lines.push("heat the oil in the pan");
        lines.push("fill the cup with water");
    }
    lines.push("the scissors sit nearby");
    lines.push("the towel sits nearby");
    fs::write(&path, lines.join("\n")).unwrap();
    path
}

fn write_inventory(dir: &Path) -> PathBuf {
    let path = dir.join("inventory.json");
    fs::write(
        &path,
        r#"[{"label":"cup","position":[0.1,0.2,0.3]},
            {"label":"scissors","position":[1.0,0.0,0.0]},
            {"label":"towel","position":[0.0,1.0,0.0]}]"#,
    )
    .unwrap();
    path
}

fn write_judgments(dir: &Path) -> PathBuf {
    let path = dir.join("judgments.jsonl");
    let mut lines = Vec::new();
    for (i, obj) in ["cup", "bowl", "scissors", "towel", "shoe", "lamp", "phone", "brick"]
        .iter()
        .enumerate()
    {
        let rating = if i == 0 { 5 } else { 1 };
        lines.push(format!(
            r#"{{"v":"pour","r1":"Theme","a1":"water","r2":"Destination","a2":"{obj}","ratings":[{rating},{rating},{rating},{rating},{rating}]}}"#
        ));
    }
    fs::write(&path, lines.join("\n")).unwrap();
    path
}

#[test]
fn ingest_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path());
    let out_a = dir.path().join("a.tsv");
    let out_b = dir.path().join("b.tsv");
    assert_success(&run(&["ingest", corpus.to_str().unwrap(), "--out", out_a.to_str().unwrap()]));
    assert_success(&run(&["ingest", corpus.to_str().unwrap(), "--out", out_b.to_str().unwrap()]));
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
    let text = fs::read_to_string(&out_a).unwrap();
    assert!(text.contains("pour"));
}

#[test]
fn ingest_missing_file_names_path() {
    let out = run(&["ingest", "/nonexistent/corpus.txt", "--out", "/tmp/unused.tsv"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/corpus.txt"), "stderr: {stderr}");
}

#[test]
fn complete_with_lm_picks_corpus_supported_object() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path());
    let inventory = write_inventory(dir.path());
    let model = dir.path().join("model.json");
    assert_success(&run(&[
        "train-lm",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]));
    let spec = format!("lm:{}", model.display());
    let out = run(&[
        "complete",
        "pour me some water",
        "--inventory",
        inventory.to_str().unwrap(),
        "--scorer",
        &spec,
        "--seed",
        "1",
    ]);
    assert_success(&out);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["frame"]["v"], "pour");
    assert_eq!(value["frame"]["a1"], "water");
    assert_eq!(value["frame"]["a2"], "cup");
}

#[test]
fn complete_emits_waypoint_plan() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path());
    let inventory = write_inventory(dir.path());
    let stats = dir.path().join("stats.tsv");
    assert_success(&run(&["ingest", corpus.to_str().unwrap(), "--out", stats.to_str().unwrap()]));
    let templates = dir.path().join("templates.tsv");
    fs::write(&templates, "pour\trole2\t0,0,0.3;0,0,0.1\n").unwrap();
    let spec = format!("cooccur:{}", stats.display());
    let out = run(&[
        "complete",
        "pour the water",
        "--inventory",
        inventory.to_str().unwrap(),
        "--scorer",
        &spec,
        "--plan",
        "--templates",
        templates.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert_success(&out);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["frame"]["a2"], "cup");
    // Waypoints are the cup's position plus each offset.
    assert_eq!(value["waypoints"][0][2].as_f64().unwrap(), 0.6);
    assert_eq!(value["waypoints"][1][2].as_f64().unwrap(), 0.4);
}

#[test]
fn unparseable_instruction_fails() {
    let dir = TempDir::new().unwrap();
    let inventory = write_inventory(dir.path());
    let out = run(&[
        "complete",
        "do something nice",
        "--inventory",
        inventory.to_str().unwrap(),
        "--scorer",
        "random",
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
}

#[test]
fn unknown_scorer_fails() {
    let dir = TempDir::new().unwrap();
    let inventory = write_inventory(dir.path());
    let out = run(&[
        "complete",
        "pour the water",
        "--inventory",
        inventory.to_str().unwrap(),
        "--scorer",
        "oracle:nope",
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scorer"));
}

#[test]
fn frame_mode_training_requires_lexicon() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path());
    let out = bin()
        .args([
            "train-lm",
            corpus.to_str().unwrap(),
            "--mode",
            "frame",
            "--out",
            dir.path().join("m.json").to_str().unwrap(),
        ])
        .env_remove("FRAMEFILL_LEXICON")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lexicon"));
}

#[test]
fn frame_mode_training_accepts_env_lexicon() {
    let dir = TempDir::new().unwrap();
    let corpus = write_corpus(dir.path());
    let lexicon = dir.path().join("lexicon.tsv");
    fs::write(
        &lexicon,
        "pour\tTheme\tDestination\tinto,in,to,onto\tpour {a1} to the {a2}\n",
    )
    .unwrap();
    let model = dir.path().join("m.json");
    let out = bin()
        .args([
            "train-lm",
            corpus.to_str().unwrap(),
            "--mode",
            "frame",
            "--out",
            model.to_str().unwrap(),
        ])
        .env("FRAMEFILL_LEXICON", &lexicon)
        .output()
        .unwrap();
    assert_success(&out);
    assert!(model.exists());
}

#[test]
fn make_scenarios_is_seeded() {
    let dir = TempDir::new().unwrap();
    let judgments = write_judgments(dir.path());
    let out_a = dir.path().join("a.jsonl");
    let out_b = dir.path().join("b.jsonl");
    for out in [&out_a, &out_b] {
        assert_success(&run(&[
            "make-scenarios",
            "--judgments",
            judgments.to_str().unwrap(),
            "--lambda",
            "1.0",
            "--k",
            "4",
            "--count",
            "20",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    let text = fs::read_to_string(&out_a).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn evaluate_writes_report() {
    let dir = TempDir::new().unwrap();
    let judgments = write_judgments(dir.path());
    let report = dir.path().join("report.csv");
    assert_success(&run(&[
        "evaluate",
        "--judgments",
        judgments.to_str().unwrap(),
        "--scorer",
        "random",
        "--lambda",
        "1.0",
        "--k",
        "4",
        "--count",
        "50",
        "--seed",
        "3",
        "--out",
        report.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("scorer,lambda,k,predicate,accuracy,n_scenarios,seed,skipped"));
    assert!(text.contains("OVERALL"));
    assert!(text.contains("pour"));
}

#[test]
fn sweep_output_is_invariant_to_jobs() {
    let dir = TempDir::new().unwrap();
    let judgments = write_judgments(dir.path());
    let corpus = write_corpus(dir.path());
    let stats = dir.path().join("stats.tsv");
    assert_success(&run(&["ingest", corpus.to_str().unwrap(), "--out", stats.to_str().unwrap()]));
    let spec = format!("cooccur:{}", stats.display());
    let run_sweep = |jobs: &str, out: &Path| {
        assert_success(&run(&[
            "sweep",
            "--judgments",
            judgments.to_str().unwrap(),
            "--scorer",
            "random",
            "--scorer",
            &spec,
            "--lambdas",
            "0.6,1.0,2.0",
            "--ks",
            "4,6",
            "--count",
            "30",
            "--seed",
            "5",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]));
    };
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    run_sweep("1", &out_a);
    run_sweep("4", &out_b);
    let a = fs::read(&out_a).unwrap();
    assert_eq!(a, fs::read(&out_b).unwrap());
    assert!(!a.is_empty());
}

use std::path::Path;
use std::process::{Command, Output};

use polarimeter::eval::{generate_discussion, SynthParams};
use polarimeter::ingest::{write_records, InteractionRecord};

fn polarimeter(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarimeter"))
        .args(args)
        .args(["--out", dir.join("out").to_str().unwrap()])
        .env("POLARIMETER_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn small(params: SynthParams) -> SynthParams {
    SynthParams {
        users_per_side: 120,
        tweets_per_user: 10,
        ..params
    }
}

const FAST: [&str; 4] = ["--n-runs", "2", "--applicability-runs", "3"];

fn write_input(dir: &Path, params: &SynthParams) -> String {
    let path = dir.join("input.jsonl");
    generate_discussion(params).unwrap().write_jsonl(&path).unwrap();
    path.to_str().unwrap().to_owned()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn controversial_input_scores_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), &small(SynthParams::controversial(2)));
    let out = polarimeter(dir.path(), &[&["run", "--input", &input], &FAST[..]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["status"], "scored");
    assert!(r["score"]["dmc_mean"].as_f64().unwrap() > 0.5);
    let fraction = r["graph"]["component_fraction"].as_f64().unwrap();
    assert!(fraction > 0.5 && fraction <= 1.0, "{fraction}");
    for file in [
        "graph.tsv",
        "graph.json",
        "nodes.tsv",
        "partition.tsv",
        "corpus.tsv",
        "model.bin",
        "report.json",
    ] {
        assert!(dir.path().join("out").join(file).is_file(), "{file}");
    }
}

#[test]
fn single_community_is_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), &small(SynthParams::non_controversial(2)));
    let out = polarimeter(dir.path(), &[&["run", "--input", &input], &FAST[..]].concat());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(dir.path())["status"], "not_applicable");
}

#[test]
fn tiny_input_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.jsonl");
    let users = ["a", "b", "c", "d", "e"];
    let records: Vec<InteractionRecord> = (0..20)
        .map(|i| InteractionRecord {
            tweet_id: i.to_string(),
            user_id: users[i % 5].into(),
            text: format!("tweet number {i}"),
            retweet_of_user: Some(users[(i + 1) % 5].into()),
            timestamp: i as i64,
            ..Default::default()
        })
        .collect();
    write_records(&path, &records).unwrap();
    let out = polarimeter(dir.path(), &["run", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn zero_epochs_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = polarimeter(dir.path(), &["run", "--input", "does-not-exist.jsonl", "--epochs", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epochs"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_prerequisite_names_its_producer() {
    let dir = tempfile::tempdir().unwrap();
    let out = polarimeter(dir.path(), &["cluster"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("polarimeter build-graph"), "{stderr}");
}

#[test]
fn stage_chain_equals_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), &small(SynthParams::controversial(5)));
    let base = [&["--input", input.as_str(), "--seed", "3"], &FAST[..]].concat();
    for stage in ["build-graph", "cluster", "train", "score"] {
        let out = polarimeter(dir.path(), &[&[stage], &base[..]].concat());
        assert_eq!(
            out.status.code(),
            Some(0),
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let chained = report(dir.path());
    let out = polarimeter(dir.path(), &[&["run"], &base[..]].concat());
    assert_eq!(out.status.code(), Some(0));
    let full = report(dir.path());
    assert_eq!(chained["config_hash"], full["config_hash"]);
    assert_eq!(chained["applicability"], full["applicability"]);
    let scores = |r: &serde_json::Value| -> Vec<serde_json::Value> {
        r["score"]["runs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x["dmc"].clone())
            .collect()
    };
    assert_eq!(scores(&chained), scores(&full));
    assert_eq!(chained["score"]["dmc_mean"], full["score"]["dmc_mean"]);
}

#[test]
fn synth_and_eval_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    for (name, extra) in [("hot", None), ("calm", Some("--single-community"))] {
        let mut args = vec![
            "synth",
            "--name",
            name,
            "--users-per-side",
            "100",
            "--tweets-per-user",
            "8",
        ];
        args.extend(extra);
        let out = polarimeter(dir.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(out_dir.join("hot.truth").is_file());
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(
        &manifest,
        "path,label\nout/hot.jsonl,controversial\nout/calm.jsonl,non_controversial\n",
    )
    .unwrap();
    let out = polarimeter(dir.path(), &[&["eval", manifest.to_str().unwrap()], &FAST[..]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l == "auc\t1.0000"), "{stdout}");
}

mod common;

use clap::Parser;
use common::*;
use qir::cli::{resolve_config, run, Cli};

fn exec(args: &[&str], env: &[(&str, &str)], stdin: &str) -> Result<String, String> {
    let cli = Cli::try_parse_from(std::iter::once("qir").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    let env: Vec<(String, String)> = env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let mut out = Vec::new();
    run(cli, env, &mut stdin.as_bytes(), &mut out).map_err(|e| e.to_string())?;
    Ok(String::from_utf8(out).unwrap())
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = data_path("toy_corpus.jsonl");
    let dump = dir.path().join("docs.jsonl");
    let out = exec(&["ingest", "--input", path(&corpus), "--format", "jsonl", "--output", path(&dump)], &[], "").unwrap();
    let sentences: usize = read_data("toy_corpus.jsonl")
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["text"].as_str().unwrap().to_string())
        .map(|t| t.split(['.', '?', '!']).filter(|s| !s.trim().is_empty()).count())
        .sum();
    assert!(out.starts_with(&format!("12 documents, {sentences} sentences")), "{out}");
    assert_eq!(std::fs::read_to_string(dump).unwrap().lines().count(), 12);
    assert!(exec(&["ingest", "--input", "/nonexistent"], &[], "").is_err());
}

#[test]
fn embed_writes_reduced_vectors() {
    let out = exec(
        &["embed", "--input", path(&data_path("toy_corpus.jsonl")), "--embeddings", path(&data_path("vectors.txt")), "--pca", "3"],
        &[("QIR_CORPUS_FORMAT", "jsonl")],
        "",
    )
    .unwrap();
    let rows: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r["vector"].as_array().unwrap().len() == 3));
}

#[test]
fn bakeoff_json_and_seed() {
    let (data, vectors) = (data_path("mini_labelled.jsonl"), data_path("vectors.txt"));
    let args = ["cluster-bakeoff", "--data", path(&data), "--embeddings", path(&vectors), "--json"];
    let report: serde_json::Value = serde_json::from_str(&exec(&args, &[], "").unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    assert_eq!(report["seed"], 0);
    let mut seeded = vec!["--seed", "5"];
    seeded.extend(args);
    let report: serde_json::Value = serde_json::from_str(&exec(&seeded, &[], "").unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
}

#[test]
fn train_ask_eval_and_session() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let pairs = data_path("toy_pairs.jsonl");
    let out = exec(
        &["train", "--data", path(&pairs), "--mode", "sentence", "--epochs", "2", "--embed-dim", "8", "--hidden", "8", "--output", path(&model)],
        &[],
        "",
    )
    .unwrap();
    assert_eq!(out.lines().filter(|l| l.starts_with("epoch")).count(), 2);
    assert!(model.exists());
    let q = exec(&["ask", "--input", "high fever", "--model", path(&model), "--max-len", "6"], &[], "").unwrap();
    assert!(q.split_whitespace().count() <= 6);
    let eval: serde_json::Value =
        serde_json::from_str(&exec(&["eval", "--data", path(&pairs), "--model", path(&model), "--mode", "sentence", "--json"], &[], "").unwrap()).unwrap();
    assert_eq!(eval["instances"], 5);
    assert!(eval["perplexity"].as_f64().unwrap() >= 1.0);

    let store = dir.path().join("store");
    let config = dir.path().join("qir.conf");
    std::fs::write(
        &config,
        format!(
            "# toy service\ncorpus = {}\nembeddings = {}\nmodel = {}\nstore = {}\nresult_size = 1\ndelta = 0.9\n",
            path(&data_path("toy_corpus.jsonl")),
            path(&data_path("vectors.txt")),
            path(&model),
            path(&store)
        ),
    )
    .unwrap();
    let answers = "\n?!\nyes\nFever and chills at night.\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\nyes\n";
    let out = exec(&["--config", path(&config), "session", "--query", "cough", "--id", "cli1"], &[("QIR_DELTA", "0.5")], answers).unwrap();
    assert!(out.starts_with("session cli1\nQ: "), "{out}");
    assert!(out.contains("try again"), "{out}");
    assert!(out.lines().any(|l| ["Converged", "Exhausted", "Terminated"].contains(&l)), "{out}");
    let saved = qir::session::SessionStore::open(&store).unwrap().load("cli1").unwrap();
    assert_eq!(saved.config.delta, 0.5);
    assert!(exec(&["--config", path(&config), "session", "--id", "cli1"], &[], "yes\n").unwrap_err().contains("exists"));
}

#[test]
fn config_layers() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.conf");
    std::fs::write(&file, "seed = 3\ndelta = 0.7\nlisten = 0.0.0.0:9000\n").unwrap();
    let cli = Cli::try_parse_from(["qir", "--config", path(&file), "serve"]).unwrap();
    let env = vec![("QIR_DELTA".to_string(), "0.6".to_string()), ("QIR_UNRELATED".to_string(), "x".to_string())];
    let cfg = resolve_config(&cli, env.clone()).unwrap();
    assert_eq!((cfg.seed, cfg.delta, cfg.listen.as_str()), (3, 0.6, "0.0.0.0:9000"));
    let cli = Cli::try_parse_from(["qir", "--config", path(&file), "--seed", "11", "serve"]).unwrap();
    assert_eq!(resolve_config(&cli, env).unwrap().seed, 11);
    std::fs::write(&file, "colour = blue\n").unwrap();
    let cli = Cli::try_parse_from(["qir", "--config", path(&file), "serve"]).unwrap();
    assert!(resolve_config(&cli, vec![]).unwrap_err().to_string().contains("colour"));
    let err = exec(&["serve"], &[("QIR_CORPUS", "/nonexistent/c.jsonl")], "").unwrap_err();
    assert!(err.contains("does not exist"), "{err}");
    assert!(exec(&["session"], &[("QIR_DELTA", "1.5")], "").unwrap_err().contains("delta"));
}

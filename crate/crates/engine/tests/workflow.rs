mod common;

use std::fs;
use std::process::Command;

use common::{build_store, small_synth, small_train};
use precedent_core::citation::CitationKind;
use precedent_core::explainer::LimeConfig;
use precedent_engine::commands::{self, TrainOptions};
use precedent_engine::store::ProjectStore;
use precedent_engine::EngineError;

#[test]
fn reingesting_unchanged_input_keeps_the_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    commands::synth(&input, &small_synth(1)).unwrap();
    let store = ProjectStore::new(dir.path().join("store"));
    let a = commands::ingest(&store, &input, None).unwrap();
    let b = commands::ingest(&store, &input, None).unwrap();
    assert_eq!(a.corpus_fingerprint, b.corpus_fingerprint);
    assert_eq!(a.duplicates_removed, 3);
    assert!(a.load.rejected.is_empty());
}

#[test]
fn corrupt_line_is_reported_and_fails_only_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    commands::synth(&input, &small_synth(1)).unwrap();
    let docs = input.join("documents.jsonl");
    let mut text = fs::read_to_string(&docs).unwrap();
    text.push_str("{\"id\": \"broken\", \"title\": \"x\"\n");
    fs::write(&docs, text).unwrap();

    let store = ProjectStore::new(dir.path().join("store"));
    let report = commands::ingest(&store, &input, None).unwrap();
    assert_eq!(report.load.rejected.len(), 1);
    assert_eq!(
        report.load.rejected[0].line,
        report.load.documents_loaded + 1
    );

    let run = |strict: bool| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_engine"));
        cmd.arg("--store")
            .arg(dir.path().join("cli-store"))
            .arg("ingest")
            .arg(&input);
        if strict {
            cmd.arg("--strict");
        }
        cmd.output().unwrap().status
    };
    assert!(run(false).success());
    assert_eq!(run(true).code(), Some(3));
}

#[test]
fn store_env_var_is_the_default_store() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    commands::synth(&input, &small_synth(2)).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_engine"))
        .env("ENGINE_STORE", dir.path().join("env-store"))
        .arg("ingest")
        .arg(&input)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env-store/corpus/documents.jsonl").exists());
}

#[test]
fn training_rejects_an_empty_grid_and_missing_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::new(dir.path().join("store"));
    let empty = TrainOptions {
        grid: vec![],
        ..TrainOptions::default()
    };
    assert!(matches!(
        commands::train(&store, &empty),
        Err(EngineError::Usage(_))
    ));
    let err = commands::train(&store, &TrainOptions::default()).unwrap_err();
    assert!(err.to_string().contains("engine ingest"), "{err}");
}

#[test]
fn inference_threshold_is_validated_and_index_counts_match() {
    let dir = tempfile::tempdir().unwrap();
    let store = build_store(dir.path(), &small_synth(3), &small_train(3), 0.9);
    assert!(matches!(
        commands::infer(&store, 1.5),
        Err(EngineError::Usage(_))
    ));
    assert!(matches!(
        commands::infer(&store, -0.1),
        Err(EngineError::Usage(_))
    ));

    let (records, meta) = store.load_citations().unwrap();
    let text = fs::read_to_string(store.citations_path()).unwrap();
    assert_eq!(text.lines().count(), records.len());
    let docs: std::collections::BTreeSet<&str> =
        records.iter().map(|r| r.doc_id.as_str()).collect();
    assert_eq!(
        docs.len(),
        records.len(),
        "one row per document with a record"
    );
    assert_eq!(meta.records, records.len());

    let strict = commands::infer(&store, 0.99).unwrap();
    let loose_potential = records
        .iter()
        .filter(|r| r.kind == CitationKind::Potential)
        .count();
    let (tight, _) = store.load_citations().unwrap();
    assert!(
        tight
            .iter()
            .filter(|r| r.kind == CitationKind::Potential)
            .count()
            <= loose_potential
    );
    assert_eq!(strict.records, tight.len());
}

#[test]
fn explanations_are_cached_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let store = build_store(dir.path(), &small_synth(4), &small_train(4), 0.9);
    let cfg = LimeConfig {
        n_samples: 200,
        ..LimeConfig::default()
    };
    let first = commands::explain_document(&store, "doc-00002", None, &cfg).unwrap();
    let path = store.explanation_path("doc-00002", first.bp_id, &cfg.fingerprint());
    let bytes = fs::read(&path).unwrap();
    let second = commands::explain_document(&store, "doc-00002", None, &cfg).unwrap();
    assert_eq!(first, second);
    assert_eq!(bytes, fs::read(&path).unwrap());
    assert!(first.fidelity_r2 <= 1.0);
    assert!(commands::explain_document(&store, "no-such-doc", None, &cfg).is_err());
}

#[test]
fn eval_reproduces_the_training_report() {
    let dir = tempfile::tempdir().unwrap();
    let store = build_store(dir.path(), &small_synth(5), &small_train(5), 0.9);
    let stored: commands::EvalSummary = store.read_json(&store.eval_path()).unwrap();
    assert_eq!(commands::eval(&store).unwrap(), stored);
    let total: usize = stored.test.confusion.iter().flatten().sum();
    let diag: usize = (0..stored.test.classes.len())
        .map(|i| stored.test.confusion[i][i])
        .sum();
    assert!((stored.test.accuracy - diag as f64 / total as f64).abs() < 1e-15);
}

#[test]
fn a_locked_store_refuses_writers() {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::new(dir.path().join("store"));
    let _held = store.lock_exclusive().unwrap();
    assert!(matches!(
        commands::infer(&store, 0.5),
        Err(EngineError::Locked(_))
    ));
}

//! The CLI workflow as library functions, so tests drive exactly what the
//! binary runs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use log::info;
use precedent_core::artifact::{ModelArtifact, TrainingMeta};
use precedent_core::citation::{batch_infer, InferenceConfig};
use precedent_core::classifier::{grid_search, Dataset, EvalReport};
use precedent_core::corpus::{
    build_sample, dedupe, load_corpus, load_corpus_files, split, to_jsonl, write_corpus,
    CorpusSplit, Document, LoadReport,
};
use precedent_core::embedding::{EmbeddingPipeline, PipelineConfig, DEFAULT_K};
use precedent_core::explainer::{explain, Explanation, LimeConfig};
use precedent_core::synth::{generate, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::store::{CitationMeta, ProjectStore, SCHEMA_VERSION};

pub const SPLIT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];
pub const DEFAULT_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub schema_version: u32,
    pub load: LoadReport,
    pub duplicates_removed: usize,
    pub documents: usize,
    pub corpus_fingerprint: String,
}

/// Loads JSONL input (a directory with both files, or explicit file paths),
/// deduplicates, and writes the validated corpus into the store.
pub fn ingest(
    store: &ProjectStore,
    documents: &Path,
    precedents: Option<&Path>,
) -> Result<IngestReport> {
    let _lock = store.lock_exclusive()?;
    let mut corpus = match precedents {
        Some(p) => load_corpus_files(documents, p)?,
        None => load_corpus(documents)?,
    };
    let before = corpus.documents.len();
    corpus.documents = dedupe(std::mem::take(&mut corpus.documents));
    let duplicates_removed = before - corpus.documents.len();
    write_corpus(store.corpus_dir(), &corpus.documents, &corpus.precedents)?;
    let report = IngestReport {
        schema_version: SCHEMA_VERSION,
        load: corpus.report.clone(),
        duplicates_removed,
        documents: corpus.documents.len(),
        corpus_fingerprint: corpus.fingerprint(),
    };
    store.write_json(&store.report_path(), &report)?;
    info!(
        "ingested {} documents ({} duplicates removed, {} lines rejected)",
        report.documents,
        duplicates_removed,
        report.load.rejected.len()
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub seed: u64,
    pub k: usize,
    pub grid: Vec<f64>,
    /// Number of most-cited precedents used as classes.
    pub classes: usize,
    /// Documents per class; defaults to the smallest class size.
    pub per_class: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            k: DEFAULT_K,
            grid: precedent_core::classifier::DEFAULT_GRID.to_vec(),
            classes: DEFAULT_CLASSES,
            per_class: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub schema_version: u32,
    pub reg_c: f64,
    pub trials: Vec<(f64, f64)>,
    pub validation: EvalReport,
    pub test: EvalReport,
}

/// The `n` precedents with the most single-label documents; ties go to the lower id.
pub fn top_classes(docs: &[Document], n: usize) -> Vec<(u32, usize)> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for bp in docs.iter().filter_map(Document::single_label) {
        *counts.entry(bp).or_default() += 1;
    }
    let mut ranked: Vec<(u32, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked.sort_unstable();
    ranked
}

fn select<'a>(by_id: &HashMap<&str, &'a Document>, ids: &[String]) -> Vec<&'a Document> {
    ids.iter().map(|id| by_id[id.as_str()]).collect()
}

fn embed_labeled(pipeline: &EmbeddingPipeline, docs: &[&Document]) -> (Vec<Vec<f64>>, Vec<u32>) {
    docs.iter()
        .map(|d| {
            (
                pipeline.embed(&d.body),
                d.single_label()
                    .expect("sampled documents are single-label"),
            )
        })
        .unzip()
}

pub fn train(store: &ProjectStore, opts: &TrainOptions) -> Result<EvalSummary> {
    let _lock = store.lock_exclusive()?;
    if opts.grid.is_empty() {
        return Err(EngineError::Usage("the reg_C grid is empty".into()));
    }
    let corpus = store.load_corpus()?;
    let ranked = top_classes(&corpus.documents, opts.classes);
    if ranked.len() < 2 {
        return Err(EngineError::Usage(format!(
            "need at least 2 precedents with single-label documents, found {}",
            ranked.len()
        )));
    }
    let classes: BTreeSet<u32> = ranked.iter().map(|c| c.0).collect();
    let per_class = opts
        .per_class
        .unwrap_or_else(|| ranked.iter().map(|c| c.1).min().unwrap_or(0));
    info!("classes {classes:?}, {per_class} documents per class");

    let sample = build_sample(&corpus.documents, &classes, per_class, opts.seed)?;
    let parts = split(&sample, SPLIT_RATIOS, opts.seed)?;
    let by_id: HashMap<&str, &Document> = sample.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let (train_docs, val_docs, test_docs) = (
        select(&by_id, &parts.train),
        select(&by_id, &parts.validation),
        select(&by_id, &parts.test),
    );

    let bodies: Vec<&str> = train_docs.iter().map(|d| d.body.as_str()).collect();
    let pipeline = EmbeddingPipeline::fit(
        &PipelineConfig {
            k: opts.k,
            seed: opts.seed,
            ..PipelineConfig::default()
        },
        &bodies,
    )?;
    let (tx, ty) = embed_labeled(&pipeline, &train_docs);
    let (vx, vy) = embed_labeled(&pipeline, &val_docs);
    let (sx, sy) = embed_labeled(&pipeline, &test_docs);
    let class_list: Vec<u32> = classes.into_iter().collect();
    let best = grid_search(
        Dataset { x: &tx, y: &ty },
        Dataset { x: &vx, y: &vy },
        &class_list,
        &opts.grid,
        opts.seed,
        pipeline.fingerprint(),
    )?;
    let test = best.classifier.evaluate(&sx, &sy)?;

    let mut grid = opts.grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let artifact = ModelArtifact::new(
        pipeline,
        best.classifier,
        TrainingMeta {
            seed: opts.seed,
            corpus_fingerprint: corpus.fingerprint(),
            reg_c: best.reg_c,
            grid,
            trials: best.trials.clone(),
            train_size: tx.len(),
        },
    )?;
    store.write_atomic(&store.model_path(), artifact.to_json()?.as_bytes())?;
    store.write_json(&store.split_path(), &parts)?;
    let summary = EvalSummary {
        schema_version: SCHEMA_VERSION,
        reg_c: best.reg_c,
        trials: best.trials,
        validation: best.report,
        test,
    };
    store.write_json(&store.eval_path(), &summary)?;
    Ok(summary)
}

/// Runs the classifier over every stored document and writes the citation index.
pub fn infer(store: &ProjectStore, t_c: f64) -> Result<CitationMeta> {
    if !(0.0..=1.0).contains(&t_c) {
        return Err(EngineError::Usage(format!(
            "--tc must be in [0, 1], got {t_c}"
        )));
    }
    let _lock = store.lock_exclusive()?;
    let corpus = store.load_corpus()?;
    let model = store.load_model()?;
    if model.training.corpus_fingerprint != corpus.fingerprint() {
        log::warn!("the model was trained on a different version of the corpus");
    }
    let cfg = InferenceConfig::for_classifier(t_c, &model.classifier)?;
    let outcome = batch_infer(&model.pipeline, &model.classifier, &corpus.documents, &cfg)?;
    let meta = CitationMeta {
        schema_version: SCHEMA_VERSION,
        model_fingerprint: model.fingerprint()?,
        corpus_fingerprint: corpus.fingerprint(),
        t_c,
        records: outcome.records.len(),
        diagnostics: outcome.diagnostics,
    };
    store.write_atomic(
        &store.citations_path(),
        to_jsonl(&outcome.records)?.as_bytes(),
    )?;
    store.write_json(&store.citations_meta_path(), &meta)?;
    Ok(meta)
}

/// Explains one decision, reusing a cached explanation when present.
pub fn explain_document(
    store: &ProjectStore,
    doc_id: &str,
    bp_id: Option<u32>,
    cfg: &LimeConfig,
) -> Result<Explanation> {
    cfg.validate()?;
    let _lock = store.lock_exclusive()?;
    let corpus = store.load_corpus()?;
    let doc = corpus
        .documents
        .iter()
        .find(|d| d.doc_id == doc_id)
        .ok_or_else(|| EngineError::Usage(format!("unknown document id {doc_id:?}")))?;
    let model = store.load_model()?;
    let bp_id = match bp_id {
        Some(b) => b,
        None => model.classifier.predict(&model.pipeline.embed(&doc.body))?,
    };
    let path = store.explanation_path(doc_id, bp_id, &cfg.fingerprint());
    if path.exists() {
        return store.read_json(&path);
    }
    let e = explain(&model.pipeline, &model.classifier, doc, bp_id, cfg)?;
    store.write_json(&path, &e)?;
    Ok(e)
}

/// Re-evaluates the stored model on the stored split.
pub fn eval(store: &ProjectStore) -> Result<EvalSummary> {
    let _lock = store.lock_shared()?;
    let corpus = store.load_corpus()?;
    let model = store.load_model()?;
    let parts: CorpusSplit = store.read_json(&store.split_path())?;
    let by_id: HashMap<&str, &Document> = corpus
        .documents
        .iter()
        .map(|d| (d.doc_id.as_str(), d))
        .collect();
    let lookup = |ids: &[String]| -> Result<Vec<&Document>> {
        ids.iter()
            .map(|id| {
                by_id.get(id.as_str()).copied().ok_or_else(|| {
                    EngineError::Inconsistent(format!(
                        "split names {id:?}, which is not in the corpus"
                    ))
                })
            })
            .collect()
    };
    let (vx, vy) = embed_labeled(&model.pipeline, &lookup(&parts.validation)?);
    let (sx, sy) = embed_labeled(&model.pipeline, &lookup(&parts.test)?);
    Ok(EvalSummary {
        schema_version: SCHEMA_VERSION,
        reg_c: model.training.reg_c,
        trials: model.training.trials.clone(),
        validation: model.classifier.evaluate(&vx, &vy)?,
        test: model.classifier.evaluate(&sx, &sy)?,
    })
}

/// Writes a synthetic corpus as `documents.jsonl` / `precedents.jsonl` into `out`.
pub fn synth(out: &Path, cfg: &SynthConfig) -> Result<usize> {
    let corpus = generate(cfg)?;
    write_corpus(out, &corpus.documents, &corpus.precedents)?;
    Ok(corpus.documents.len())
}

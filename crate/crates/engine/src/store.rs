//! On-disk layout of a project:
//!
//! ```text
//! <root>/corpus/documents.jsonl    deduplicated, validated documents
//! <root>/corpus/precedents.jsonl
//! <root>/corpus/report.json        load report of the last ingest
//! <root>/model.json                embedding pipeline + classifier
//! <root>/split.json                train/validation/test ids
//! <root>/eval.json                 validation and test metrics
//! <root>/citations.jsonl           citation index
//! <root>/citations.meta.json       fingerprints the index was built from
//! <root>/explanations/             cached explanations
//! <root>/.lock
//! ```

use std::fs::{self, File, OpenOptions, TryLockError};
use std::path::{Path, PathBuf};

use precedent_core::artifact::ModelArtifact;
use precedent_core::citation::CitationRecord;
use precedent_core::corpus::{load_corpus, Corpus};
use precedent_core::fingerprint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationMeta {
    pub schema_version: u32,
    pub model_fingerprint: String,
    pub corpus_fingerprint: String,
    pub t_c: f64,
    pub records: usize,
    /// `(doc_id, message)` for skipped documents.
    pub diagnostics: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct ProjectStore {
    root: PathBuf,
}

/// Exclusive or shared hold on the store's lock file, released on drop.
#[derive(Debug)]
pub struct StoreLock {
    _file: File,
}

fn io(path: &Path, e: std::io::Error) -> EngineError {
    precedent_core::Error::io(path, e).into()
}

impl ProjectStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.root.join("corpus")
    }

    pub fn report_path(&self) -> PathBuf {
        self.corpus_dir().join("report.json")
    }

    pub fn model_path(&self) -> PathBuf {
        self.root.join("model.json")
    }

    pub fn split_path(&self) -> PathBuf {
        self.root.join("split.json")
    }

    pub fn eval_path(&self) -> PathBuf {
        self.root.join("eval.json")
    }

    pub fn citations_path(&self) -> PathBuf {
        self.root.join("citations.jsonl")
    }

    pub fn citations_meta_path(&self) -> PathBuf {
        self.root.join("citations.meta.json")
    }

    pub fn explanations_dir(&self) -> PathBuf {
        self.root.join("explanations")
    }

    pub fn explanation_path(&self, doc_id: &str, bp_id: u32, config_fingerprint: &str) -> PathBuf {
        let key = fingerprint::sha256_hex(
            format!("{doc_id}\u{0}{bp_id}\u{0}{config_fingerprint}").as_bytes(),
        );
        self.explanations_dir().join(format!("{}.json", &key[..32]))
    }

    fn lock_file(&self) -> Result<File> {
        fs::create_dir_all(&self.root).map_err(|e| io(&self.root, e))?;
        let path = self.root.join(".lock");
        OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| io(&path, e))
    }

    /// Exclusive lock for commands that write to the store.
    pub fn lock_exclusive(&self) -> Result<StoreLock> {
        let file = self.lock_file()?;
        match file.try_lock() {
            Ok(()) => Ok(StoreLock { _file: file }),
            Err(TryLockError::WouldBlock) => {
                Err(EngineError::Locked(self.root.display().to_string()))
            }
            Err(TryLockError::Error(e)) => Err(io(&self.root.join(".lock"), e)),
        }
    }

    /// Shared lock for readers.
    pub fn lock_shared(&self) -> Result<StoreLock> {
        let file = self.lock_file()?;
        match file.try_lock_shared() {
            Ok(()) => Ok(StoreLock { _file: file }),
            Err(TryLockError::WouldBlock) => {
                Err(EngineError::Locked(self.root.display().to_string()))
            }
            Err(TryLockError::Error(e)) => Err(io(&self.root.join(".lock"), e)),
        }
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        let dir = self.corpus_dir();
        if !dir.join("documents.jsonl").exists() {
            return Err(EngineError::MissingArtifact {
                what: "corpus",
                path: dir.display().to_string(),
                hint: "run `engine ingest` first",
            });
        }
        Ok(load_corpus(&dir)?)
    }

    pub fn load_model(&self) -> Result<ModelArtifact> {
        let path = self.model_path();
        if !path.exists() {
            return Err(EngineError::MissingArtifact {
                what: "model artifact",
                path: path.display().to_string(),
                hint: "run `engine train` first",
            });
        }
        Ok(ModelArtifact::load(&path)?)
    }

    pub fn load_citations(&self) -> Result<(Vec<CitationRecord>, CitationMeta)> {
        let path = self.citations_path();
        let meta_path = self.citations_meta_path();
        if !path.exists() || !meta_path.exists() {
            return Err(EngineError::MissingArtifact {
                what: "citation index",
                path: path.display().to_string(),
                hint: "run `engine infer` first",
            });
        }
        let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<CitationRecord>, _>>()
            .map_err(precedent_core::Error::from)?;
        let meta: CitationMeta = self.read_json(&meta_path)?;
        if meta.records != records.len() {
            return Err(EngineError::Inconsistent(format!(
                "citation index has {} rows but its metadata records {}",
                records.len(),
                meta.records
            )));
        }
        Ok((records, meta))
    }

    pub fn read_json<T: DeserializeOwned>(&self, path: &Path) -> Result<T> {
        let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
        Ok(serde_json::from_str(&text).map_err(precedent_core::Error::from)?)
    }

    /// Writes through a temporary file and a rename, so readers never see a partial file.
    pub fn write_atomic(&self, path: &Path, contents: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, contents).map_err(|e| io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| io(path, e))
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(precedent_core::Error::from)?;
        text.push('\n');
        self.write_atomic(path, text.as_bytes())
    }
}

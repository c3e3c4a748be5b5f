//! Explicit and potential citation records.
//!
//! For each document the classifier's top class `c*` is the only candidate.
//! If the document already cites `c*` explicitly the record is explicit;
//! otherwise it is potential when `p[c*] ≥ t_c`.

use std::collections::BTreeSet;

use log::info;
use serde::{Deserialize, Serialize};

use crate::classifier::{argmax, CalibratedClassifier};
use crate::corpus::{Document, Month};
use crate::embedding::EmbeddingPipeline;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CitationKind {
    Explicit,
    Potential,
}

impl std::str::FromStr for CitationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Self::Explicit),
            "potential" => Ok(Self::Potential),
            other => Err(Error::InvalidInput(format!(
                "unknown citation kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationRecord {
    pub doc_id: String,
    pub bp_id: u32,
    pub kind: CitationKind,
    pub confidence: f64,
    pub month: Option<Month>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    t_c: f64,
    bp_scope: BTreeSet<u32>,
}

impl InferenceConfig {
    pub fn new(t_c: f64, bp_scope: BTreeSet<u32>) -> Result<Self> {
        if !(0.0..=1.0).contains(&t_c) {
            return Err(Error::InvalidInput(format!(
                "t_c = {t_c} is outside [0, 1]"
            )));
        }
        Ok(Self { t_c, bp_scope })
    }

    /// Threshold with every classifier class in scope.
    pub fn for_classifier(t_c: f64, clf: &CalibratedClassifier) -> Result<Self> {
        Self::new(t_c, clf.classes().iter().copied().collect())
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    pub fn bp_scope(&self) -> &BTreeSet<u32> {
        &self.bp_scope
    }

    /// Explicit labels outside the scope, if any.
    pub fn out_of_scope(&self, doc: &Document) -> Vec<u32> {
        doc.explicit_bps
            .iter()
            .copied()
            .filter(|b| !self.bp_scope.contains(b))
            .collect()
    }
}

/// Applies the record rule to an already computed probability vector.
pub fn decide(
    doc: &Document,
    classes: &[u32],
    proba: &[f64],
    cfg: &InferenceConfig,
) -> Option<CitationRecord> {
    if !cfg.out_of_scope(doc).is_empty() || proba.is_empty() {
        return None;
    }
    let best = argmax(proba);
    let bp_id = classes[best];
    if !cfg.bp_scope.contains(&bp_id) {
        return None;
    }
    let (kind, confidence) = if doc.explicit_bps.contains(&bp_id) {
        (CitationKind::Explicit, 1.0)
    } else if proba[best] >= cfg.t_c {
        (CitationKind::Potential, proba[best])
    } else {
        return None;
    };
    Some(CitationRecord {
        doc_id: doc.doc_id.clone(),
        bp_id,
        kind,
        confidence,
        month: doc.month(),
    })
}

pub fn check_fingerprint(pipeline: &EmbeddingPipeline, clf: &CalibratedClassifier) -> Result<()> {
    if clf.embedding_fingerprint != pipeline.fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: clf.embedding_fingerprint.clone(),
            actual: pipeline.fingerprint().to_string(),
        });
    }
    Ok(())
}

pub fn infer_document(
    pipeline: &EmbeddingPipeline,
    clf: &CalibratedClassifier,
    doc: &Document,
    cfg: &InferenceConfig,
) -> Result<Option<CitationRecord>> {
    check_fingerprint(pipeline, clf)?;
    let proba = clf.predict_proba(&pipeline.embed(&doc.body))?;
    Ok(decide(doc, clf.classes(), &proba, cfg))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub records: Vec<CitationRecord>,
    /// `(doc_id, message)` for documents skipped or failed.
    pub diagnostics: Vec<(String, String)>,
}

impl BatchOutcome {
    pub fn potential(&self) -> impl Iterator<Item = &CitationRecord> {
        self.records
            .iter()
            .filter(|r| r.kind == CitationKind::Potential)
    }
}

/// `infer_document` over `docs` in order; per-document failures are collected.
pub fn batch_infer(
    pipeline: &EmbeddingPipeline,
    clf: &CalibratedClassifier,
    docs: &[Document],
    cfg: &InferenceConfig,
) -> Result<BatchOutcome> {
    check_fingerprint(pipeline, clf)?;
    let mut out = BatchOutcome::default();
    for doc in docs {
        let outside = cfg.out_of_scope(doc);
        if !outside.is_empty() {
            let msg = format!("explicit citations {outside:?} are outside the precedent scope");
            info!("skipping {}: {msg}", doc.doc_id);
            out.diagnostics.push((doc.doc_id.clone(), msg));
            continue;
        }
        match infer_document(pipeline, clf, doc, cfg) {
            Ok(Some(r)) => out.records.push(r),
            Ok(None) => {}
            Err(e) => out.diagnostics.push((doc.doc_id.clone(), e.to_string())),
        }
    }
    Ok(out)
}

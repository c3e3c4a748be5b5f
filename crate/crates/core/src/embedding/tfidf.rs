use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::SparseVector;
use crate::corpus::TokenSeq;
use crate::{Error, Result};

/// Vocabulary and smoothed inverse document frequencies.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, so every weight is at least 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfIdfData", into = "TfIdfData")]
pub struct TfIdfModel {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    doc_count: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TfIdfData {
    doc_count: usize,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
}

impl TryFrom<TfIdfData> for TfIdfModel {
    type Error = Error;

    fn try_from(d: TfIdfData) -> Result<Self> {
        if d.vocabulary.len() != d.idf.len() {
            return Err(Error::DimensionMismatch {
                expected: d.vocabulary.len(),
                actual: d.idf.len(),
            });
        }
        if d.idf.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidInput(
                "idf weights must be finite and positive".into(),
            ));
        }
        let index: HashMap<String, usize> = d
            .vocabulary
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        if index.len() != d.vocabulary.len() {
            return Err(Error::InvalidInput(
                "vocabulary contains duplicate terms".into(),
            ));
        }
        Ok(Self {
            vocabulary: d.vocabulary,
            idf: d.idf,
            doc_count: d.doc_count,
            index,
        })
    }
}

impl From<TfIdfModel> for TfIdfData {
    fn from(m: TfIdfModel) -> Self {
        TfIdfData {
            doc_count: m.doc_count,
            vocabulary: m.vocabulary,
            idf: m.idf,
        }
    }
}

impl TfIdfModel {
    /// Vocabulary = terms with document frequency ≥ `min_df`, indexed in
    /// lexicographic order.
    pub fn fit(docs: &[TokenSeq], min_df: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidInput(
                "cannot fit TF-IDF on zero documents".into(),
            ));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for d in docs {
            let mut seen: Vec<&str> = d.tokens.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let (vocabulary, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .filter(|&(_, c)| c >= min_df)
            .map(|(t, c)| (t.to_string(), ((1.0 + n) / (1.0 + c as f64)).ln() + 1.0))
            .unzip();
        if vocabulary.is_empty() {
            return Err(Error::EmptyVocabulary(min_df));
        }
        TfIdfData {
            doc_count: docs.len(),
            vocabulary,
            idf,
        }
        .try_into()
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Raw counts times idf, L2-normalized. Out-of-vocabulary terms are ignored
    /// and an all-OOV document maps to the zero vector.
    pub fn transform(&self, doc: &TokenSeq) -> SparseVector {
        let pairs = doc
            .tokens
            .iter()
            .filter_map(|t| self.index_of(t))
            .map(|i| (i, self.idf[i]))
            .collect();
        let mut v = SparseVector::from_pairs(self.dim(), pairs);
        let norm = v.norm();
        if norm > 0.0 {
            for e in &mut v.entries {
                e.1 /= norm;
            }
        }
        v
    }
}

//! Data behind the exploration views: paragraph/precedent similarity,
//! document ordering, topic clusters, timelines and similarity histograms.

mod nmf;
mod timeline;

pub use nmf::{fit_nmf, TopicModel, EPSILON as NMF_EPSILON};
pub use timeline::{filter_records, timeline_bins, TimelineBin, TimelineFilter};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentedText;
use crate::embedding::{EmbeddingPipeline, TfIdfModel};
use crate::Result;

/// Multiplicative-update iterations used for per-selection clustering.
pub const NMF_ITERATIONS: usize = 200;
pub const KEYWORDS_PER_TOPIC: usize = 10;

/// `1 − θ/π` for the angle θ between `u` and `v`; 0 if either is zero.
///
/// θ is taken as `2·atan2(‖û − v̂‖, ‖û + v̂‖)` on the unit vectors, which stays
/// accurate for nearly parallel or opposite inputs where `acos` of the cosine
/// loses about half the significant digits.
pub fn angular_similarity(u: &[f64], v: &[f64]) -> f64 {
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    let theta = 2.0 * diff.sqrt().atan2(sum.sqrt());
    (1.0 - theta / PI).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphSimilarity {
    pub paragraph_index: usize,
    pub similarity: f64,
    /// Length in characters.
    pub length: usize,
}

/// Similarity of each paragraph to the precedent statement, computed on
/// unstandardized SVD coordinates.
pub fn paragraph_similarities(
    pipeline: &EmbeddingPipeline,
    body: &str,
    seg: &SegmentedText,
    statement: &str,
) -> Vec<ParagraphSimilarity> {
    let target = pipeline.reduce(statement);
    seg.paragraphs
        .iter()
        .enumerate()
        .map(|(i, span)| {
            let text = &body[span.clone()];
            ParagraphSimilarity {
                paragraph_index: i,
                similarity: angular_similarity(&pipeline.reduce(text), &target),
                length: text.chars().count(),
            }
        })
        .collect()
}

/// Maximum paragraph similarity.
pub fn document_score(sims: &[ParagraphSimilarity]) -> Option<f64> {
    sims.iter().map(|s| s.similarity).reduce(f64::max)
}

pub trait Scored {
    fn score(&self) -> f64;
    fn doc_id(&self) -> &str;
}

/// Descending score, then ascending document id.
pub fn order_documents<T: Scored>(items: &mut [T]) {
    items.sort_by(|a, b| {
        b.score()
            .total_cmp(&a.score())
            .then_with(|| a.doc_id().cmp(b.doc_id()))
    });
}

/// Equal-width bins over [0, 1]; 1.0 falls in the last bin.
pub fn similarity_histogram(scores: &[f64], n_bins: usize) -> Vec<usize> {
    let n_bins = n_bins.max(1);
    let mut bins = vec![0; n_bins];
    for &s in scores {
        let i = ((s.clamp(0.0, 1.0) * n_bins as f64).floor() as usize).min(n_bins - 1);
        bins[i] += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicClusters {
    pub model: TopicModel,
    pub vocabulary: Vec<String>,
    /// Topic of each input document, in input order.
    pub assignments: Vec<usize>,
    pub keywords: Vec<Vec<(String, f64)>>,
}

/// Most frequent lowercase spelling of each normalized term in `bodies`;
/// ties go to the lexicographically smaller spelling.
pub fn surface_forms<S: AsRef<str>>(
    pipeline: &EmbeddingPipeline,
    bodies: &[S],
) -> BTreeMap<String, String> {
    let normalizer = pipeline.normalizer();
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for body in bodies {
        let body = body.as_ref();
        for (span, term) in normalizer.terms_with_spans(body) {
            *counts
                .entry(term)
                .or_default()
                .entry(body[span].to_lowercase())
                .or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(term, spellings)| {
            let best = spellings
                .into_iter()
                .fold(
                    (String::new(), 0),
                    |best, (w, c)| if c > best.1 { (w, c) } else { best },
                );
            (term, best.0)
        })
        .collect()
}

/// Clusters a selection of documents: TF-IDF refitted on the selection
/// (min_df 1) followed by NMF. `k` is capped at the matrix rank bound.
pub fn topic_clusters<S: AsRef<str>>(
    pipeline: &EmbeddingPipeline,
    bodies: &[S],
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<TopicClusters> {
    let tokens: Vec<_> = bodies.iter().map(|b| pipeline.tokens(b.as_ref())).collect();
    let tfidf = TfIdfModel::fit(&tokens, 1)?;
    let x: Vec<Vec<f64>> = tokens
        .iter()
        .map(|t| tfidf.transform(t).to_dense())
        .collect();
    let k = k.clamp(1, x.len().min(tfidf.dim()));
    let model = fit_nmf(&x, k, iterations, seed)?;
    let vocabulary = tfidf.vocabulary().to_vec();
    Ok(TopicClusters {
        assignments: model.assign_topics(),
        keywords: model.keywords(&vocabulary, KEYWORDS_PER_TOPIC)?,
        model,
        vocabulary,
    })
}

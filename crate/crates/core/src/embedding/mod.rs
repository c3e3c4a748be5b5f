//! Truncated TF-IDF: raw text → stripped → normalized tokens → TF-IDF →
//! rank-k SVD projection → standardized k-vector.

mod sparse;
mod standardize;
mod svd;
mod tfidf;

pub use sparse::SparseVector;
pub use standardize::Standardizer;
pub use svd::{SvdModel, EXACT_LIMIT, OVERSAMPLING, POWER_ITERATIONS};
pub use tfidf::TfIdfModel;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{CitationPatterns, Normalizer, NormalizerConfig, TokenSeq, DEFAULT_PATTERNS};
use crate::{fingerprint, Error, Result};

pub const DEFAULT_K: usize = 50;
pub const DEFAULT_MIN_DF: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub normalizer: NormalizerConfig,
    pub patterns: Vec<String>,
    pub min_df: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            normalizer: NormalizerConfig::default(),
            patterns: DEFAULT_PATTERNS.iter().map(|p| p.to_string()).collect(),
            min_df: DEFAULT_MIN_DF,
            k: DEFAULT_K,
            seed: 0,
        }
    }
}

/// Fitted text → vector pipeline. Immutable once built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PipelineData", into = "PipelineData")]
pub struct EmbeddingPipeline {
    normalizer: Normalizer,
    patterns: CitationPatterns,
    tfidf: TfIdfModel,
    svd: SvdModel,
    standardizer: Standardizer,
    fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct PipelineData {
    normalizer_fingerprint: String,
    normalizer: NormalizerConfig,
    patterns: Vec<String>,
    tfidf: TfIdfModel,
    svd: SvdModel,
    standardizer: Standardizer,
}

impl TryFrom<PipelineData> for EmbeddingPipeline {
    type Error = Error;

    fn try_from(d: PipelineData) -> Result<Self> {
        let normalizer = Normalizer::new(&d.normalizer)?;
        if normalizer.fingerprint() != d.normalizer_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: d.normalizer_fingerprint,
                actual: normalizer.fingerprint(),
            });
        }
        let patterns = CitationPatterns::new(&d.patterns)?;
        Self::assemble(normalizer, patterns, d.tfidf, d.svd, d.standardizer)
    }
}

impl From<EmbeddingPipeline> for PipelineData {
    fn from(p: EmbeddingPipeline) -> Self {
        PipelineData {
            normalizer_fingerprint: p.normalizer.fingerprint(),
            normalizer: p.normalizer.config().clone(),
            patterns: p.patterns.sources().to_vec(),
            tfidf: p.tfidf,
            svd: p.svd,
            standardizer: p.standardizer,
        }
    }
}

impl EmbeddingPipeline {
    fn assemble(
        normalizer: Normalizer,
        patterns: CitationPatterns,
        tfidf: TfIdfModel,
        svd: SvdModel,
        standardizer: Standardizer,
    ) -> Result<Self> {
        if svd.dim() != tfidf.dim() {
            return Err(Error::DimensionMismatch {
                expected: tfidf.dim(),
                actual: svd.dim(),
            });
        }
        if standardizer.dim() != svd.k() {
            return Err(Error::DimensionMismatch {
                expected: svd.k(),
                actual: standardizer.dim(),
            });
        }
        let mut p = Self {
            normalizer,
            patterns,
            tfidf,
            svd,
            standardizer,
            fingerprint: String::new(),
        };
        p.fingerprint = fingerprint::of_json(&PipelineData::from(p.clone()));
        Ok(p)
    }

    /// Fits every stage on the given training bodies. The SVD rank is capped
    /// at min(documents, vocabulary).
    pub fn fit<S: AsRef<str>>(config: &PipelineConfig, bodies: &[S]) -> Result<Self> {
        let normalizer = Normalizer::new(&config.normalizer)?;
        let patterns = CitationPatterns::new(&config.patterns)?;
        let tokens: Vec<TokenSeq> = bodies
            .iter()
            .map(|b| normalizer.normalize(&patterns.strip(b.as_ref())))
            .collect();
        let tfidf = TfIdfModel::fit(&tokens, config.min_df)?;
        let rows: Vec<SparseVector> = tokens.iter().map(|t| tfidf.transform(t)).collect();
        let k = config.k.min(rows.len()).min(tfidf.dim());
        if k < config.k {
            warn!(
                "reducing SVD rank from {} to {k} ({} documents, {} terms)",
                config.k,
                rows.len(),
                tfidf.dim()
            );
        }
        let svd = SvdModel::fit(&rows, tfidf.dim(), k, config.seed)?;
        let reduced: Vec<Vec<f64>> = rows.iter().map(|r| svd.project(r)).collect::<Result<_>>()?;
        let standardizer = Standardizer::fit(&reduced)?;
        Self::assemble(normalizer, patterns, tfidf, svd, standardizer)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn k(&self) -> usize {
        self.svd.k()
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn patterns(&self) -> &CitationPatterns {
        &self.patterns
    }

    pub fn tfidf(&self) -> &TfIdfModel {
        &self.tfidf
    }

    pub fn svd(&self) -> &SvdModel {
        &self.svd
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    /// Citation-stripped, normalized tokens.
    pub fn tokens(&self, body: &str) -> TokenSeq {
        self.normalizer.normalize(&self.patterns.strip(body))
    }

    /// Unstandardized SVD coordinates of a token sequence.
    pub fn reduce_tokens(&self, tokens: &TokenSeq) -> Vec<f64> {
        self.svd
            .project(&self.tfidf.transform(tokens))
            .expect("pipeline stages share dimensions")
    }

    pub fn embed_tokens(&self, tokens: &TokenSeq) -> Vec<f64> {
        self.standardizer
            .apply(&self.reduce_tokens(tokens))
            .expect("pipeline stages share dimensions")
    }

    /// Unstandardized SVD coordinates of a raw text.
    pub fn reduce(&self, body: &str) -> Vec<f64> {
        self.reduce_tokens(&self.tokens(body))
    }

    /// Classifier-space embedding of a raw text.
    pub fn embed(&self, body: &str) -> Vec<f64> {
        self.embed_tokens(&self.tokens(body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config() -> PipelineConfig {
        PipelineConfig {
            normalizer: NormalizerConfig {
                stopwords: "none".into(),
                stemmer: "none".into(),
                ..Default::default()
            },
            min_df: 1,
            k: 2,
            ..Default::default()
        }
    }

    const TOY: [&str; 4] = [
        "prisão preventiva habeas corpus. Súmula Vinculante 11",
        "algemas prisão uso de algemas",
        "acesso aos autos defesa advogado",
        "advogado acesso prova documentada",
    ];

    #[test]
    fn embed_chains_the_stages() {
        let p = EmbeddingPipeline::fit(&toy_config(), &TOY).unwrap();
        let body = "Uso de algemas e acesso do advogado. Súmula Vinculante 14";
        let tokens = p.normalizer().normalize(&p.patterns().strip(body));
        assert_eq!(tokens, p.tokens(body));
        assert!(!tokens.tokens.iter().any(|t| t == "14" || t == "súmula"));
        let tf = p.tfidf().transform(&tokens);
        let projected = p.svd().project(&tf).unwrap();
        let expected = p.standardizer().apply(&projected).unwrap();
        assert_eq!(p.embed(body), expected);
        assert_eq!(p.reduce(body), projected);
    }

    #[test]
    fn rank_is_capped_by_vocabulary_and_documents() {
        let mut cfg = toy_config();
        cfg.k = 50;
        let p = EmbeddingPipeline::fit(&cfg, &TOY).unwrap();
        assert_eq!(p.k(), 4);
    }

    #[test]
    fn json_round_trip_reproduces_embeddings() {
        let p = EmbeddingPipeline::fit(&toy_config(), &TOY).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: EmbeddingPipeline = serde_json::from_str(&json).unwrap();
        assert_eq!(back.fingerprint(), p.fingerprint());
        for body in TOY {
            let (a, b) = (p.embed(body), back.embed(body));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn tampered_normalizer_fingerprint_is_rejected() {
        let p = EmbeddingPipeline::fit(&toy_config(), &TOY).unwrap();
        let mut v: serde_json::Value = serde_json::to_value(&p).unwrap();
        v["normalizer_fingerprint"] = "bogus".into();
        assert!(serde_json::from_value::<EmbeddingPipeline>(v).is_err());
    }
}

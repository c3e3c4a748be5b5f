//! Sentence-level Lime explanations.
//!
//! Perturbed copies of a document are made by dropping random subsets of its
//! sentences. Each copy is scored by the classifier, weighted by an
//! exponential kernel on the fraction of sentences removed, and a ridge
//! regression over the keep/drop mask is fitted to the scores. The
//! coefficients are the sentence importances.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::citation::check_fingerprint;
use crate::classifier::CalibratedClassifier;
use crate::corpus::{segment, Document, SegmentedText, TokenSeq};
use crate::embedding::EmbeddingPipeline;
use crate::{fingerprint, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub ridge_lambda: f64,
    /// Kernel width; `None` means `0.25 · √(sentence count)`.
    pub kernel_width: Option<f64>,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            ridge_lambda: 1.0,
            kernel_width: None,
            seed: 0,
        }
    }
}

impl LimeConfig {
    pub fn width(&self, n_sentences: usize) -> f64 {
        self.kernel_width
            .unwrap_or(0.25 * (n_sentences as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ridge_lambda must be ≥ 0, got {}",
                self.ridge_lambda
            )));
        }
        if self
            .kernel_width
            .is_some_and(|w| !(w > 0.0 && w.is_finite()))
        {
            return Err(Error::InvalidInput("kernel_width must be positive".into()));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        fingerprint::of_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSample {
    pub mask: Vec<bool>,
    pub prob: f64,
    pub weight: f64,
}

/// First mask keeps everything; each other mask removes between 1 and n−1
/// sentences (count uniform, then a uniform subset). At least `n + 1` masks
/// are drawn when `n > 1`; a single sentence yields only the full mask.
pub fn sample_masks(n_sentences: usize, n_samples: usize, seed: u64) -> Result<Vec<Vec<bool>>> {
    if n_sentences == 0 {
        return Err(Error::InvalidInput(
            "cannot perturb a document with no sentences".into(),
        ));
    }
    let mut masks = vec![vec![true; n_sentences]];
    if n_sentences == 1 {
        return Ok(masks);
    }
    let total = n_samples.max(n_sentences + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while masks.len() < total {
        let removed = rng.gen_range(1..n_sentences);
        let mut mask = vec![true; n_sentences];
        for i in index::sample(&mut rng, n_sentences, removed) {
            mask[i] = false;
        }
        masks.push(mask);
    }
    Ok(masks)
}

/// `exp(−d² / width²)` with `d` the fraction of sentences removed.
pub fn kernel_weight(mask: &[bool], width: f64) -> f64 {
    let removed = mask.iter().filter(|&&k| !k).count() as f64;
    let d = removed / mask.len() as f64;
    (-(d * d) / (width * width)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub fidelity_r2: f64,
}

/// `Σ wᵢ (probᵢ − β·maskᵢ − b)² + λ‖β‖²`, intercept unpenalized.
pub fn ridge_objective(
    samples: &[PerturbationSample],
    weights: &[f64],
    intercept: f64,
    lambda: f64,
) -> f64 {
    let fit: f64 = samples
        .iter()
        .map(|s| {
            let pred = intercept
                + s.mask
                    .iter()
                    .zip(weights)
                    .filter(|(k, _)| **k)
                    .map(|(_, w)| w)
                    .sum::<f64>();
            s.weight * (s.prob - pred).powi(2)
        })
        .sum();
    fit + lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Solves the weighted ridge normal equations by Cholesky factorization.
pub fn fit_surrogate(samples: &[PerturbationSample], ridge_lambda: f64) -> Result<SurrogateFit> {
    let n = samples.first().map_or(0, |s| s.mask.len());
    if samples.len() < n + 1 {
        return Err(Error::InvalidInput(format!(
            "surrogate over {n} sentences needs at least {} samples, got {}",
            n + 1,
            samples.len()
        )));
    }
    let dim = n + 1;
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut z = vec![0.0; dim];
    for s in samples {
        if s.mask.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.mask.len(),
            });
        }
        for (zi, &k) in z.iter_mut().zip(&s.mask) {
            *zi = if k { 1.0 } else { 0.0 };
        }
        z[n] = 1.0;
        for i in 0..dim {
            if z[i] == 0.0 {
                continue;
            }
            rhs[i] += s.weight * s.prob;
            for j in 0..dim {
                gram[(i, j)] += s.weight * z[j];
            }
        }
    }
    for i in 0..n {
        gram[(i, i)] += ridge_lambda;
    }
    let max_diag = (0..dim).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
    let l = chol.l();
    if (0..dim).any(|i| l[(i, i)] * l[(i, i)] <= 1e-12 * max_diag) {
        return Err(Error::SingularSystem);
    }
    let beta = chol.solve(&rhs);
    let weights: Vec<f64> = beta.iter().take(n).copied().collect();
    let intercept = beta[n];

    let total_w: f64 = samples.iter().map(|s| s.weight).sum();
    let mean = samples.iter().map(|s| s.weight * s.prob).sum::<f64>() / total_w;
    let (mut sse, mut sst) = (0.0, 0.0);
    for s in samples {
        let pred = intercept
            + s.mask
                .iter()
                .zip(&weights)
                .filter(|(k, _)| **k)
                .map(|(_, w)| w)
                .sum::<f64>();
        sse += s.weight * (s.prob - pred).powi(2);
        sst += s.weight * (s.prob - mean).powi(2);
    }
    let fidelity_r2 = if sst > 1e-300 {
        1.0 - sse / sst
    } else if sse <= 1e-24 {
        1.0
    } else {
        0.0
    };
    Ok(SurrogateFit {
        weights,
        intercept,
        fidelity_r2: fidelity_r2.min(1.0),
    })
}

/// Probability of the explained class for a sentence mask.
pub trait MaskScorer {
    fn n_sentences(&self) -> usize;
    fn score(&self, mask: &[bool]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateRun {
    pub fit: SurrogateFit,
    pub samples: Vec<PerturbationSample>,
    /// True when the document has a single sentence and no surrogate was fitted.
    pub degenerate: bool,
}

/// Samples masks, scores them, and fits the surrogate.
pub fn run_surrogate(scorer: &dyn MaskScorer, cfg: &LimeConfig, seed: u64) -> Result<SurrogateRun> {
    cfg.validate()?;
    let n = scorer.n_sentences();
    let width = cfg.width(n);
    let samples = sample_masks(n, cfg.n_samples, seed)?
        .into_iter()
        .map(|mask| {
            let prob = scorer.score(&mask)?;
            let weight = kernel_weight(&mask, width);
            Ok(PerturbationSample { mask, prob, weight })
        })
        .collect::<Result<Vec<_>>>()?;
    if n == 1 {
        return Ok(SurrogateRun {
            fit: SurrogateFit {
                weights: vec![0.0],
                intercept: samples[0].prob,
                fidelity_r2: 0.0,
            },
            samples,
            degenerate: true,
        });
    }
    Ok(SurrogateRun {
        fit: fit_surrogate(&samples, cfg.ridge_lambda)?,
        samples,
        degenerate: false,
    })
}

/// Rebuilds the text of the kept sentences in original order, keeping the
/// whitespace that followed each kept sentence in the source.
pub fn masked_text(body: &str, seg: &SegmentedText, mask: &[bool]) -> Result<String> {
    if mask.len() != seg.sentences.len() {
        return Err(Error::DimensionMismatch {
            expected: seg.sentences.len(),
            actual: mask.len(),
        });
    }
    let kept: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if kept.is_empty() {
        return Err(Error::InvalidInput("mask removes every sentence".into()));
    }
    let mut out = String::new();
    for (pos, &i) in kept.iter().enumerate() {
        let span = &seg.sentences[i];
        out.push_str(&body[span.clone()]);
        if pos + 1 < kept.len() {
            let gap_end = seg.sentences.get(i + 1).map_or(body.len(), |s| s.start);
            out.push_str(&body[span.end..gap_end]);
        }
    }
    Ok(out)
}

/// Probability of `bp_id` for the document restricted to the kept sentences.
pub fn evaluate_masked(
    pipeline: &EmbeddingPipeline,
    clf: &CalibratedClassifier,
    doc: &Document,
    seg: &SegmentedText,
    mask: &[bool],
    bp_id: u32,
) -> Result<f64> {
    let class = clf.class_index(bp_id).ok_or_else(|| {
        Error::InvalidInput(format!("precedent {bp_id} is not a classifier class"))
    })?;
    let text = masked_text(&doc.body, seg, mask)?;
    Ok(clf.predict_proba(&pipeline.embed(&text))?[class])
}

/// Scores masks by concatenating per-sentence token lists, which matches
/// re-normalizing the rebuilt text because tokens never cross sentence spans.
pub struct DocumentScorer<'a> {
    pipeline: &'a EmbeddingPipeline,
    clf: &'a CalibratedClassifier,
    class: usize,
    sentence_tokens: Vec<Vec<String>>,
}

impl<'a> DocumentScorer<'a> {
    pub fn new(
        pipeline: &'a EmbeddingPipeline,
        clf: &'a CalibratedClassifier,
        body: &str,
        seg: &SegmentedText,
        bp_id: u32,
    ) -> Result<Self> {
        check_fingerprint(pipeline, clf)?;
        let class = clf.class_index(bp_id).ok_or_else(|| {
            Error::InvalidInput(format!("precedent {bp_id} is not a classifier class"))
        })?;
        let sentence_tokens = seg
            .sentences
            .iter()
            .map(|s| pipeline.tokens(&body[s.clone()]).tokens)
            .collect();
        Ok(Self {
            pipeline,
            clf,
            class,
            sentence_tokens,
        })
    }
}

impl MaskScorer for DocumentScorer<'_> {
    fn n_sentences(&self) -> usize {
        self.sentence_tokens.len()
    }

    fn score(&self, mask: &[bool]) -> Result<f64> {
        if !mask.iter().any(|&k| k) {
            return Err(Error::InvalidInput("mask removes every sentence".into()));
        }
        let tokens = TokenSeq {
            tokens: self
                .sentence_tokens
                .iter()
                .zip(mask)
                .filter(|(_, &k)| k)
                .flat_map(|(t, _)| t.iter().cloned())
                .collect(),
        };
        Ok(self
            .clf
            .predict_proba(&self.pipeline.embed_tokens(&tokens))?[self.class])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceWeight {
    pub span: Range<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub doc_id: String,
    pub bp_id: u32,
    pub sentences: Vec<SentenceWeight>,
    pub intercept: f64,
    pub fidelity_r2: f64,
    pub degenerate: bool,
    pub n_samples: usize,
    /// Seed actually used for sampling, derived from the configured seed and the document id.
    pub sample_seed: u64,
    pub config: LimeConfig,
}

/// Per-document sampling seed.
pub fn derive_seed(seed: u64, doc_id: &str) -> u64 {
    let digest = fingerprint::sha256_hex(format!("{seed}:{doc_id}").as_bytes());
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

pub fn explain(
    pipeline: &EmbeddingPipeline,
    clf: &CalibratedClassifier,
    doc: &Document,
    bp_id: u32,
    cfg: &LimeConfig,
) -> Result<Explanation> {
    let seg = segment(&doc.body);
    let scorer = DocumentScorer::new(pipeline, clf, &doc.body, &seg, bp_id)?;
    let sample_seed = derive_seed(cfg.seed, &doc.doc_id);
    let run = run_surrogate(&scorer, cfg, sample_seed)?;
    Ok(Explanation {
        doc_id: doc.doc_id.clone(),
        bp_id,
        sentences: seg
            .sentences
            .iter()
            .zip(&run.fit.weights)
            .map(|(span, &weight)| SentenceWeight {
                span: span.clone(),
                weight,
            })
            .collect(),
        intercept: run.fit.intercept,
        fidelity_r2: run.fit.fidelity_r2,
        degenerate: run.degenerate,
        n_samples: run.samples.len(),
        sample_seed,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear {
        base: f64,
        coef: Vec<f64>,
    }

    impl MaskScorer for Linear {
        fn n_sentences(&self) -> usize {
            self.coef.len()
        }

        fn score(&self, mask: &[bool]) -> Result<f64> {
            Ok(self.base
                + mask
                    .iter()
                    .zip(&self.coef)
                    .filter(|(k, _)| **k)
                    .map(|(_, c)| c)
                    .sum::<f64>())
        }
    }

    #[test]
    fn single_sentence_has_only_the_full_mask() {
        assert_eq!(sample_masks(1, 1000, 0).unwrap(), vec![vec![true]]);
        assert!(sample_masks(0, 10, 0).is_err());
    }

    #[test]
    fn masks_are_seeded_and_never_empty() {
        let a = sample_masks(6, 200, 42).unwrap();
        assert_eq!(a, sample_masks(6, 200, 42).unwrap());
        assert_ne!(a, sample_masks(6, 200, 43).unwrap());
        assert_eq!(a[0], vec![true; 6]);
        assert!(a
            .iter()
            .skip(1)
            .all(|m| m.iter().any(|&k| k) && m.iter().any(|&k| !k)));
        assert_eq!(sample_masks(6, 3, 0).unwrap().len(), 7);
    }

    #[test]
    fn keep_rate_is_moderate() {
        let masks = sample_masks(4, 10_000, 7).unwrap();
        for i in 0..4 {
            let kept = masks.iter().filter(|m| m[i]).count() as f64 / masks.len() as f64;
            assert!((0.4..=0.8).contains(&kept), "sentence {i}: {kept}");
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_weight(&[true, true], 0.5), 1.0);
        assert!((kernel_weight(&[true, false], 0.5) - (-1.0f64).exp()).abs() < 1e-15);
        let mut prev = 1.0;
        for removed in 1..5 {
            let mask: Vec<bool> = (0..5).map(|i| i >= removed).collect();
            let w = kernel_weight(&mask, 0.6);
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn recovers_linear_model() {
        let scorer = Linear {
            base: 0.2,
            coef: vec![0.0, 0.0, 0.5, 0.0],
        };
        let cfg = LimeConfig {
            ridge_lambda: 1e-9,
            ..Default::default()
        };
        let run = run_surrogate(&scorer, &cfg, 1).unwrap();
        for (w, c) in run.fit.weights.iter().zip(&scorer.coef) {
            assert!((w - c).abs() < 1e-6);
        }
        assert!((run.fit.intercept - 0.2).abs() < 1e-6);
        assert!(run.fit.fidelity_r2 >= 1.0 - 1e-6);
    }

    #[test]
    fn constant_and_heavily_regularized() {
        let scorer = Linear {
            base: 0.3,
            coef: vec![0.0; 5],
        };
        let run = run_surrogate(&scorer, &LimeConfig::default(), 2).unwrap();
        assert!(run.fit.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((run.fit.intercept - 0.3).abs() < 1e-12);

        let scorer = Linear {
            base: 0.1,
            coef: vec![0.3, -0.2, 0.1],
        };
        let cfg = LimeConfig {
            ridge_lambda: 1e12,
            ..Default::default()
        };
        let run = run_surrogate(&scorer, &cfg, 2).unwrap();
        assert!(run.fit.weights.iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn singular_without_ridge() {
        // only two distinct masks over three sentences: rank deficient
        let samples: Vec<PerturbationSample> = (0..6)
            .map(|i| PerturbationSample {
                mask: if i % 2 == 0 {
                    vec![true, true, true]
                } else {
                    vec![true, false, false]
                },
                prob: 0.5,
                weight: 1.0,
            })
            .collect();
        assert!(matches!(
            fit_surrogate(&samples, 0.0),
            Err(Error::SingularSystem)
        ));
        assert!(fit_surrogate(&samples, 0.1).is_ok());
    }

    #[test]
    fn returned_weights_are_a_ridge_minimum() {
        let scorer = Linear {
            base: 0.05,
            coef: vec![0.2, -0.1, 0.4, 0.0, 0.15],
        };
        let cfg = LimeConfig::default();
        let run = run_surrogate(&scorer, &cfg, 3).unwrap();
        let best = ridge_objective(
            &run.samples,
            &run.fit.weights,
            run.fit.intercept,
            cfg.ridge_lambda,
        );
        for i in 0..5 {
            for delta in [1e-4, -1e-4] {
                let mut w = run.fit.weights.clone();
                w[i] += delta;
                assert!(
                    ridge_objective(&run.samples, &w, run.fit.intercept, cfg.ridge_lambda) >= best
                );
            }
        }
        for delta in [1e-4, -1e-4] {
            assert!(
                ridge_objective(
                    &run.samples,
                    &run.fit.weights,
                    run.fit.intercept + delta,
                    cfg.ridge_lambda
                ) >= best
            );
        }
    }

    #[test]
    fn masked_text_keeps_order_and_gaps() {
        let body = "Um. Dois.\n\nTrês. Quatro.";
        let seg = segment(body);
        assert_eq!(
            masked_text(body, &seg, &[true, false, true, true]).unwrap(),
            "Um. Três. Quatro."
        );
        assert_eq!(
            masked_text(body, &seg, &[false, true, true, false]).unwrap(),
            "Dois.\n\nTrês."
        );
        assert!(masked_text(body, &seg, &[false; 4]).is_err());
        assert!(masked_text(body, &seg, &[true; 3]).is_err());
    }

    #[test]
    fn derived_seeds_differ_per_document() {
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    }
}

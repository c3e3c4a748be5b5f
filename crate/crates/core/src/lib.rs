//! Identification of explicit and potential citations to binding precedents
//! in court decisions.
//!
//! The crate is organized as a pipeline:
//!
//! - [`corpus`]: loading, citation patterns, text normalization, segmentation,
//!   deduplication, balanced sampling and stratified splits.
//! - [`embedding`]: TF-IDF weighting, truncated SVD projection and
//!   per-coordinate standardization ("Truncated TF-IDF").
//! - [`classifier`]: one-vs-rest linear SVM with per-class Platt calibration.
//! - [`citation`]: explicit/potential citation records at a threshold.
//! - [`explainer`]: sentence-level Lime explanations.
//! - [`analytics`]: paragraph similarity, NMF topics, timelines, histograms.
//! - [`artifact`]: the persisted model document.
//! - [`synth`]: a seeded synthetic corpus generator for desk evaluation.

pub mod analytics;
pub mod artifact;
pub mod citation;
pub mod classifier;
pub mod corpus;
pub mod embedding;
mod error;
pub mod explainer;
pub mod fingerprint;
pub mod synth;

pub use error::{Error, Result};

//! The trained model as one self-describing JSON document: embedding
//! pipeline, calibrated classifier and training metadata.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::citation::check_fingerprint;
use crate::classifier::CalibratedClassifier;
use crate::embedding::EmbeddingPipeline;
use crate::{fingerprint, Error, Result};

pub const FORMAT: &str = "precedent-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub reg_c: f64,
    pub grid: Vec<f64>,
    /// `(reg_C, validation accuracy)` per grid value.
    pub trials: Vec<(f64, f64)>,
    pub train_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub pipeline: EmbeddingPipeline,
    pub classifier: CalibratedClassifier,
    pub training: TrainingMeta,
}

impl ModelArtifact {
    pub fn new(
        pipeline: EmbeddingPipeline,
        classifier: CalibratedClassifier,
        training: TrainingMeta,
    ) -> Result<Self> {
        check_fingerprint(&pipeline, &classifier)?;
        Ok(Self {
            format: FORMAT.to_string(),
            version: VERSION,
            pipeline,
            classifier,
            training,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses and validates the format tag, version and fingerprint link.
    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text)?;
        if a.format != FORMAT || a.version != VERSION {
            return Err(Error::Config(format!(
                "unsupported model artifact {} v{} (expected {FORMAT} v{VERSION})",
                a.format, a.version
            )));
        }
        check_fingerprint(&a.pipeline, &a.classifier)?;
        Ok(a)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Hash of the serialized artifact; identifies a model version.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(fingerprint::sha256_hex(self.to_json()?.as_bytes()))
    }
}

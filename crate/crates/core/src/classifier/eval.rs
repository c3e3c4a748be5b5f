use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Accuracy and support-weighted precision/recall/F1 over argmax predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<u32>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `confusion[true][predicted]`, indexed like `classes`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    /// Builds the report from class indices (into `classes`).
    pub fn from_predictions(classes: &[u32], truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                actual: predicted.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::InvalidInput("cannot evaluate an empty set".into()));
        }
        let k = classes.len();
        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::InvalidInput(format!(
                    "class index out of range ({t}, {p})"
                )));
            }
            confusion[t][p] += 1;
        }
        let total = truth.len() as f64;
        let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
        let mut correct = 0;
        for c in 0..k {
            let tp = confusion[c][c];
            correct += tp;
            let support: usize = confusion[c].iter().sum();
            let predicted_c: usize = (0..k).map(|r| confusion[r][c]).sum();
            let p = if predicted_c > 0 {
                tp as f64 / predicted_c as f64
            } else {
                0.0
            };
            let r = if support > 0 {
                tp as f64 / support as f64
            } else {
                0.0
            };
            let f = if p + r > 0.0 {
                2.0 * p * r / (p + r)
            } else {
                0.0
            };
            let w = support as f64 / total;
            precision += w * p;
            recall += w * r;
            f1 += w * f;
        }
        Ok(Self {
            classes: classes.to_vec(),
            accuracy: correct as f64 / total,
            precision,
            recall,
            f1,
            confusion,
        })
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

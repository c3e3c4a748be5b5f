use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-coordinate centering and scaling with population moments.
/// Zero-variance coordinates keep `stdev = 1` and are only centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

const ZERO_VARIANCE: f64 = 1e-12;

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "standardizer needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let k = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: r.len(),
            });
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..k)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let stdev = (0..k)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > ZERO_VARIANCE {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, stdev })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.stdev))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

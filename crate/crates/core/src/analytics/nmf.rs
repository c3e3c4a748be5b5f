//! Frobenius-norm NMF with multiplicative updates.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::argmax;
use crate::{Error, Result};

pub const EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub iterations: usize,
    pub seed: u64,
    /// docs × k, row-major.
    pub w: Vec<Vec<f64>>,
    /// k × terms, row-major.
    pub h: Vec<Vec<f64>>,
    /// `‖X − WH‖²_F` at initialization followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

fn objective(x: &DMatrix<f64>, w: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    (x - w * h).norm_squared()
}

/// Factorizes `x` (rows = documents) as `W·H` with non-negative factors.
pub fn fit_nmf(x: &[Vec<f64>], k: usize, iterations: usize, seed: u64) -> Result<TopicModel> {
    let n = x.len();
    let m = x.first().map_or(0, Vec::len);
    if let Some(r) = x.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: r.len(),
        });
    }
    if k == 0 || k > n.min(m) {
        return Err(Error::InvalidInput(format!(
            "topic count {k} must be in 1..={}",
            n.min(m)
        )));
    }
    if x.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "NMF input must be finite and non-negative".into(),
        ));
    }
    let xm = DMatrix::from_fn(n, m, |i, j| x[i][j]);
    let mean = xm.mean();
    let scale = if mean > 0.0 {
        (mean / k as f64).sqrt()
    } else {
        1.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::from_fn(n, k, |_, _| 0.0);
    for v in w.iter_mut() {
        *v = scale * rng.gen_range(0.01..1.0);
    }
    let mut h = DMatrix::from_fn(k, m, |_, _| 0.0);
    for v in h.iter_mut() {
        *v = scale * rng.gen_range(0.01..1.0);
    }
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(objective(&xm, &w, &h));
    for _ in 0..iterations {
        let num = &xm * h.transpose();
        let den = &w * (&h * h.transpose());
        w.zip_zip_apply(&num, &den, |wv, nv, dv| *wv *= nv / (dv + EPSILON));
        let num = w.transpose() * &xm;
        let den = (w.transpose() * &w) * &h;
        h.zip_zip_apply(&num, &den, |hv, nv, dv| *hv *= nv / (dv + EPSILON));
        trace.push(objective(&xm, &w, &h));
    }
    Ok(TopicModel {
        k,
        iterations,
        seed,
        w: to_rows(&w),
        h: to_rows(&h),
        objective_trace: trace,
    })
}

impl TopicModel {
    /// Whether every objective step is non-increasing up to `rel_tol`.
    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        self.objective_trace
            .windows(2)
            .all(|p| p[1] <= p[0] + rel_tol * p[0].max(f64::MIN_POSITIVE))
    }

    /// Dominant topic of each document; lower index on ties.
    pub fn assign_topics(&self) -> Vec<usize> {
        self.w.iter().map(|row| argmax(row)).collect()
    }

    /// Top `m` terms per topic by H weight, ties broken by term.
    pub fn keywords(&self, vocabulary: &[String], m: usize) -> Result<Vec<Vec<(String, f64)>>> {
        self.h
            .iter()
            .map(|row| {
                if row.len() != vocabulary.len() {
                    return Err(Error::DimensionMismatch {
                        expected: row.len(),
                        actual: vocabulary.len(),
                    });
                }
                let mut terms: Vec<(String, f64)> = vocabulary
                    .iter()
                    .cloned()
                    .zip(row.iter().copied())
                    .collect();
                terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                terms.truncate(m);
                Ok(terms)
            })
            .collect()
    }
}

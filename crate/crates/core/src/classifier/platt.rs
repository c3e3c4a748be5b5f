//! Platt sigmoid fitting: `p(s) = 1 / (1 + exp(A·s + B))`.
//!
//! Targets are Platt's smoothed labels `(N₊+1)/(N₊+2)` and `1/(N₋+2)`; the
//! negative log-likelihood is minimized by Newton's method with backtracking.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const GRADIENT_TOLERANCE: f64 = 1e-10;
const MAX_ITER: usize = 200;
const MIN_STEP: f64 = 1e-12;
const HESSIAN_RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmoid {
    pub a: f64,
    pub b: f64,
}

impl Sigmoid {
    pub fn prob(&self, score: f64) -> f64 {
        let f = self.a * score + self.b;
        if f >= 0.0 {
            let e = (-f).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + f.exp())
        }
    }
}

/// Negative log-likelihood of `sig` against smoothed targets.
pub fn platt_nll(sig: Sigmoid, scores: &[f64], positive: &[bool]) -> f64 {
    let targets = smoothed_targets(positive);
    scores
        .iter()
        .zip(&targets)
        .map(|(&s, &t)| {
            let f = sig.a * s + sig.b;
            // log(1 + e^f) - (1 - t) f, written to avoid overflow
            if f >= 0.0 {
                t * f + (1.0 + (-f).exp()).ln()
            } else {
                (t - 1.0) * f + (1.0 + f.exp()).ln()
            }
        })
        .sum()
}

fn smoothed_targets(positive: &[bool]) -> Vec<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    positive.iter().map(|&p| if p { hi } else { lo }).collect()
}

pub fn fit_sigmoid(scores: &[f64], positive: &[bool]) -> Result<Sigmoid> {
    if scores.len() != positive.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: positive.len(),
        });
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidInput(
            "Platt calibration needs both positive and negative labels".into(),
        ));
    }
    let targets = smoothed_targets(positive);
    let mut sig = Sigmoid {
        a: 0.0,
        b: ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln(),
    };
    let mut fval = platt_nll(sig, scores, positive);
    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) =
            (HESSIAN_RIDGE, HESSIAN_RIDGE, 0.0, 0.0, 0.0);
        for (&s, &t) in scores.iter().zip(&targets) {
            let p = sig.prob(s);
            let q = 1.0 - p;
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = t - p;
            g1 += s * d1;
            g2 += d1;
        }
        if g1.hypot(g2) <= GRADIENT_TOLERANCE {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut improved = false;
        while step >= MIN_STEP {
            let cand = Sigmoid {
                a: sig.a + step * da,
                b: sig.b + step * db,
            };
            let cf = platt_nll(cand, scores, positive);
            if cf <= fval + 1e-4 * step * gd {
                sig = cand;
                fval = cf;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            // at the floating point floor of the objective
            break;
        }
    }
    Ok(sig)
}

/// Per-class sigmoids aligned with the classifier's class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    pub classes: Vec<u32>,
    pub sigmoids: Vec<Sigmoid>,
}

impl PlattCalibrator {
    /// `scores[c][i]` is the out-of-fold score of example `i` for `classes[c]`.
    pub fn fit(classes: &[u32], scores: &[Vec<f64>], labels: &[u32]) -> Result<Self> {
        let mut sigmoids = Vec::with_capacity(classes.len());
        for (&class, s) in classes.iter().zip(scores) {
            let positive: Vec<bool> = labels.iter().map(|&l| l == class).collect();
            let sig = fit_sigmoid(s, &positive).map_err(|_| {
                Error::InvalidInput(format!(
                    "calibration labels for class {class} are all identical"
                ))
            })?;
            let mean = |want: bool| {
                let v: Vec<f64> = s
                    .iter()
                    .zip(&positive)
                    .filter(|(_, &p)| p == want)
                    .map(|(x, _)| *x)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            if mean(true) > mean(false) && sig.a >= 0.0 {
                warn!(
                    "class {class}: positives score higher but fitted A = {} is not negative",
                    sig.a
                );
            }
            sigmoids.push(sig);
        }
        Ok(Self {
            classes: classes.to_vec(),
            sigmoids,
        })
    }
}

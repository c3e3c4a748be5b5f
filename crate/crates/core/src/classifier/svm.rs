//! L1-loss linear SVM trained by dual coordinate descent.
//!
//! The bias is an augmented constant feature, so the solved problem is
//! `min ½(‖w‖² + b²) + C Σ max(0, 1 − yᵢ(w·xᵢ + b))`. Coordinates are visited in
//! a seeded random permutation each epoch; training stops when the relative
//! duality gap drops to [`GAP_TOLERANCE`] or after [`MAX_EPOCHS`] sweeps.

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const GAP_TOLERANCE: f64 = 1e-6;
pub const MAX_EPOCHS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub epochs: usize,
    pub primal: f64,
    pub dual: f64,
}

impl SolveStats {
    pub fn relative_gap(&self) -> f64 {
        (self.primal - self.dual) / self.primal.abs().max(1.0)
    }
}

/// Weight vector and bias for one binary problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `½(‖w‖² + b²) + C Σ hinge`.
pub fn hinge_objective(model: &BinarySvm, x: &[Vec<f64>], positive: &[bool], reg_c: f64) -> f64 {
    let reg = 0.5 * (dot(&model.weights, &model.weights) + model.bias * model.bias);
    let loss: f64 = x
        .iter()
        .zip(positive)
        .map(|(xi, &p)| {
            let y = if p { 1.0 } else { -1.0 };
            (1.0 - y * model.score(xi)).max(0.0)
        })
        .sum();
    reg + reg_c * loss
}

/// Dual coordinate descent with shrinking: variables stuck at a bound are
/// dropped from the sweep, and the duality gap is checked over the full set
/// each time the active set looks converged. If the gap is still too large
/// the projected-gradient tolerance is tightened and every variable is
/// reactivated.
pub fn train_binary(
    x: &[Vec<f64>],
    positive: &[bool],
    reg_c: f64,
    seed: u64,
) -> (BinarySvm, SolveStats) {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let y: Vec<f64> = positive
        .iter()
        .map(|&p| if p { 1.0 } else { -1.0 })
        .collect();
    let qd: Vec<f64> = x.iter().map(|xi| dot(xi, xi) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut model = BinarySvm {
        weights: vec![0.0; d],
        bias: 0.0,
    };
    let mut index: Vec<usize> = (0..n).collect();
    let mut active = n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SolveStats {
        epochs: 0,
        primal: f64::INFINITY,
        dual: f64::NEG_INFINITY,
    };
    let mut pg_tolerance = 0.1;
    let (mut pg_max_old, mut pg_min_old) = (f64::INFINITY, f64::NEG_INFINITY);
    while stats.epochs < MAX_EPOCHS {
        index[..active].shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut s = 0;
        while s < active {
            let i = index[s];
            let g = y[i] * model.score(&x[i]) - 1.0;
            let a = alpha[i];
            let projected = if a == 0.0 {
                if g > pg_max_old {
                    active -= 1;
                    index.swap(s, active);
                    continue;
                }
                g.min(0.0)
            } else if a == reg_c {
                if g < pg_min_old {
                    active -= 1;
                    index.swap(s, active);
                    continue;
                }
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(projected);
            pg_min = pg_min.min(projected);
            s += 1;
            if projected == 0.0 {
                continue;
            }
            let next = (a - g / qd[i]).clamp(0.0, reg_c);
            let step = (next - a) * y[i];
            if step != 0.0 {
                for (w, xi) in model.weights.iter_mut().zip(&x[i]) {
                    *w += step * xi;
                }
                model.bias += step;
                alpha[i] = next;
            }
        }
        stats.epochs += 1;
        if active == 0 || pg_max - pg_min <= pg_tolerance {
            let norm_sq = dot(&model.weights, &model.weights) + model.bias * model.bias;
            stats.primal = hinge_objective(&model, x, positive, reg_c);
            stats.dual = alpha.iter().sum::<f64>() - 0.5 * norm_sq;
            if stats.relative_gap() <= GAP_TOLERANCE {
                break;
            }
            if active == n {
                pg_tolerance *= 0.1;
            }
            active = n;
            pg_max_old = f64::INFINITY;
            pg_min_old = f64::NEG_INFINITY;
            continue;
        }
        pg_max_old = if pg_max <= 0.0 { f64::INFINITY } else { pg_max };
        pg_min_old = if pg_min >= 0.0 {
            f64::NEG_INFINITY
        } else {
            pg_min
        };
    }
    if stats.primal.is_infinite() || stats.epochs == MAX_EPOCHS {
        let norm_sq = dot(&model.weights, &model.weights) + model.bias * model.bias;
        stats.primal = hinge_objective(&model, x, positive, reg_c);
        stats.dual = alpha.iter().sum::<f64>() - 0.5 * norm_sq;
    }
    (model, stats)
}

/// One-vs-rest linear model; row `c` of `weights` scores `classes[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOvrModel {
    pub classes: Vec<u32>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub reg_c: f64,
}

impl LinearOvrModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// `w_c · x + b_c` for every class.
    pub fn decision_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }
}

/// Trains one binary SVM per class, in class order.
pub fn train_ovr(
    x: &[Vec<f64>],
    y: &[u32],
    classes: &[u32],
    reg_c: f64,
    seed: u64,
) -> Result<(LinearOvrModel, Vec<SolveStats>)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "one-vs-rest needs at least 2 classes, got {}",
            classes.len()
        )));
    }
    if !(reg_c > 0.0 && reg_c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "reg_C must be positive, got {reg_c}"
        )));
    }
    let d = x.first().map_or(0, Vec::len);
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    let mut model = LinearOvrModel {
        classes: classes.to_vec(),
        weights: Vec::with_capacity(classes.len()),
        biases: Vec::with_capacity(classes.len()),
        reg_c,
    };
    for &class in classes {
        if !y.contains(&class) {
            return Err(Error::NoPositives(class));
        }
    }
    for &class in classes {
        if y.iter().all(|&l| l == class) {
            return Err(Error::NoNegatives(class));
        }
    }
    let mut all_stats = Vec::with_capacity(classes.len());
    for &class in classes {
        let positive: Vec<bool> = y.iter().map(|&l| l == class).collect();
        let (svm, stats) = train_binary(x, &positive, reg_c, seed);
        if stats.relative_gap() > GAP_TOLERANCE {
            warn!(
                "class {class}: stopped after {} epochs with relative duality gap {:.3e} (reg_C = {reg_c})",
                stats.epochs,
                stats.relative_gap()
            );
        }
        model.weights.push(svm.weights);
        model.biases.push(svm.bias);
        all_stats.push(stats);
    }
    Ok((model, all_stats))
}

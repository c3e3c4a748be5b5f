//! One-vs-rest linear SVM with per-class Platt calibration.

mod eval;
mod platt;
mod svm;

pub use eval::EvalReport;
pub use platt::{fit_sigmoid, platt_nll, PlattCalibrator, Sigmoid, GRADIENT_TOLERANCE};
pub use svm::{
    hinge_objective, train_binary, train_ovr, BinarySvm, LinearOvrModel, SolveStats, GAP_TOLERANCE,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
/// Folds used to produce out-of-fold scores for calibration.
pub const CALIBRATION_FOLDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedClassifier {
    pub model: LinearOvrModel,
    pub calibrator: PlattCalibrator,
    pub embedding_fingerprint: String,
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Divides positive values by their sum.
pub fn normalize_simplex(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    values.iter().map(|v| v / total).collect()
}

/// Stratified fold index for each example, stable for a seed.
fn stratified_folds(y: &[u32], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<u32> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut assignment = vec![0; y.len()];
    for class in classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

impl CalibratedClassifier {
    /// Trains the final model on all rows and calibrates on out-of-fold scores.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u32],
        classes: &[u32],
        reg_c: f64,
        seed: u64,
        embedding_fingerprint: &str,
    ) -> Result<Self> {
        let folds = stratified_folds(y, CALIBRATION_FOLDS, seed);
        let mut oof = vec![vec![0.0; x.len()]; classes.len()];
        for fold in 0..CALIBRATION_FOLDS {
            let (train_idx, held_idx): (Vec<usize>, Vec<usize>) =
                (0..x.len()).partition(|&i| folds[i] != fold);
            let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<u32> = train_idx.iter().map(|&i| y[i]).collect();
            let (m, _) = train_ovr(&tx, &ty, classes, reg_c, seed)?;
            for &i in &held_idx {
                for (c, s) in m.decision_scores(&x[i])?.into_iter().enumerate() {
                    oof[c][i] = s;
                }
            }
        }
        let calibrator = PlattCalibrator::fit(classes, &oof, y)?;
        let (model, _) = train_ovr(x, y, classes, reg_c, seed)?;
        Ok(Self {
            model,
            calibrator,
            embedding_fingerprint: embedding_fingerprint.to_string(),
        })
    }

    pub fn classes(&self) -> &[u32] {
        &self.model.classes
    }

    pub fn class_index(&self, bp_id: u32) -> Option<usize> {
        self.model.classes.iter().position(|&c| c == bp_id)
    }

    /// Per-class sigmoid outputs before normalization.
    pub fn calibrated_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scores = self.model.decision_scores(x)?;
        Ok(scores
            .iter()
            .zip(&self.calibrator.sigmoids)
            .map(|(&s, sig)| sig.prob(s).max(f64::MIN_POSITIVE))
            .collect())
    }

    /// Probability simplex over [`Self::classes`].
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(normalize_simplex(&self.calibrated_scores(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<u32> {
        Ok(self.model.classes[argmax(&self.predict_proba(x)?)])
    }

    /// Report over labeled rows.
    pub fn evaluate(&self, x: &[Vec<f64>], y: &[u32]) -> Result<EvalReport> {
        let mut truth = Vec::with_capacity(y.len());
        let mut predicted = Vec::with_capacity(y.len());
        for (xi, &yi) in x.iter().zip(y) {
            truth.push(
                self.class_index(yi).ok_or_else(|| {
                    Error::InvalidInput(format!("label {yi} is not a model class"))
                })?,
            );
            predicted.push(argmax(&self.predict_proba(xi)?));
        }
        EvalReport::from_predictions(self.classes(), &truth, &predicted)
    }
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub reg_c: f64,
    pub report: EvalReport,
    pub classifier: CalibratedClassifier,
    /// `(reg_C, validation accuracy)` for every grid value, ascending in reg_C.
    pub trials: Vec<(f64, f64)>,
}

pub struct Dataset<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [u32],
}

/// Picks the reg_C with the best validation accuracy; ties go to the smaller value.
pub fn grid_search(
    train: Dataset<'_>,
    validation: Dataset<'_>,
    classes: &[u32],
    grid: &[f64],
    seed: u64,
    embedding_fingerprint: &str,
) -> Result<GridSearchResult> {
    let mut values: Vec<f64> = grid.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut best: Option<GridSearchResult> = None;
    let mut trials = Vec::with_capacity(values.len());
    for c in values {
        let clf =
            CalibratedClassifier::fit(train.x, train.y, classes, c, seed, embedding_fingerprint)?;
        let report = clf.evaluate(validation.x, validation.y)?;
        trials.push((c, report.accuracy));
        if best
            .as_ref()
            .is_none_or(|b| report.accuracy > b.report.accuracy)
        {
            best = Some(GridSearchResult {
                reg_c: c,
                report,
                classifier: clf,
                trials: Vec::new(),
            });
        }
    }
    let mut best = best.ok_or_else(|| Error::InvalidInput("empty reg_C grid".into()))?;
    best.trials = trials;
    Ok(best)
}

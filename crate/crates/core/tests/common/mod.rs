#![allow(dead_code)]

use std::collections::BTreeSet;

use precedent_core::classifier::CalibratedClassifier;
use precedent_core::corpus::{build_sample, dedupe, Document};
use precedent_core::embedding::{EmbeddingPipeline, PipelineConfig};
use precedent_core::synth::{generate, SynthConfig, SynthCorpus};

pub struct Trained {
    pub corpus: SynthCorpus,
    pub documents: Vec<Document>,
    pub pipeline: EmbeddingPipeline,
    pub classifier: CalibratedClassifier,
}

/// A small model trained on every labeled synthetic document, reg_C = 1.
pub fn small_model(classes: usize, per_class: usize, seed: u64) -> Trained {
    let corpus = generate(&SynthConfig {
        bp_ids: precedent_core::synth::DEFAULT_BP_IDS[..classes].to_vec(),
        docs_per_class: per_class,
        unlabeled: 40,
        multi_label: 0,
        duplicates: 0,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let documents = dedupe(corpus.documents.clone());
    let bp_ids: BTreeSet<u32> = corpus.precedents.iter().map(|p| p.bp_id).collect();
    let sample = build_sample(&documents, &bp_ids, per_class, seed).unwrap();
    let bodies: Vec<&str> = sample.iter().map(|d| d.body.as_str()).collect();
    let pipeline = EmbeddingPipeline::fit(
        &PipelineConfig {
            k: 20,
            seed,
            ..PipelineConfig::default()
        },
        &bodies,
    )
    .unwrap();
    let x: Vec<Vec<f64>> = sample.iter().map(|d| pipeline.embed(&d.body)).collect();
    let y: Vec<u32> = sample.iter().map(|d| d.single_label().unwrap()).collect();
    let classes: Vec<u32> = bp_ids.into_iter().collect();
    let classifier =
        CalibratedClassifier::fit(&x, &y, &classes, 1.0, seed, pipeline.fingerprint()).unwrap();
    Trained {
        corpus,
        documents,
        pipeline,
        classifier,
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
/// eigenvalues in descending order with eigenvectors as columns of `v`.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n)
        .map(|r| order.iter().map(|&i| v[r][i]).collect())
        .collect();
    (values, vectors)
}

/// `XᵀX` for row-major `x`.
pub fn gram(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x[0].len();
    let mut g = vec![vec![0.0; d]; d];
    for row in x {
        for i in 0..d {
            for j in 0..d {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    g
}

/// Solves `a · z = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * z[k]).sum();
        z[row] = (b[row] - s) / a[row][row];
    }
    z
}

//! Truncated SVD of a sparse document-term matrix.
//!
//! Small problems (min(N, |V|) ≤ [`EXACT_LIMIT`]) use a dense decomposition.
//! Larger ones use randomized subspace iteration: a Gaussian sketch with
//! [`OVERSAMPLING`] extra columns, [`POWER_ITERATIONS`] re-orthonormalized
//! power steps, then an exact SVD of the small projected matrix.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SparseVector;
use crate::{Error, Result};

pub const EXACT_LIMIT: usize = 64;
pub const OVERSAMPLING: usize = 10;
pub const POWER_ITERATIONS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SvdData", into = "SvdData")]
pub struct SvdModel {
    k: usize,
    dim: usize,
    /// k × dim, row-major; rows are right singular vectors.
    components: Vec<f64>,
    singular_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SvdData {
    k: usize,
    dim: usize,
    singular_values: Vec<f64>,
    components: Vec<f64>,
}

impl TryFrom<SvdData> for SvdModel {
    type Error = Error;

    fn try_from(d: SvdData) -> Result<Self> {
        if d.components.len() != d.k * d.dim {
            return Err(Error::DimensionMismatch {
                expected: d.k * d.dim,
                actual: d.components.len(),
            });
        }
        if d.singular_values.len() != d.k {
            return Err(Error::DimensionMismatch {
                expected: d.k,
                actual: d.singular_values.len(),
            });
        }
        Ok(Self {
            k: d.k,
            dim: d.dim,
            components: d.components,
            singular_values: d.singular_values,
        })
    }
}

impl From<SvdModel> for SvdData {
    fn from(m: SvdModel) -> Self {
        SvdData {
            k: m.k,
            dim: m.dim,
            singular_values: m.singular_values,
            components: m.components,
        }
    }
}

impl SvdModel {
    /// Top-`k` right singular vectors of the (uncentered) matrix whose rows are
    /// `rows`. Each component is signed so its largest-magnitude entry is
    /// positive.
    pub fn fit(rows: &[SparseVector], dim: usize, k: usize, seed: u64) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.dim != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.dim,
            });
        }
        let min_dim = rows.len().min(dim);
        if k == 0 || k > min_dim {
            return Err(Error::InvalidInput(format!(
                "SVD rank {k} must be in 1..={min_dim} for a {}×{dim} matrix",
                rows.len()
            )));
        }
        let (vt, sigma) = if min_dim <= EXACT_LIMIT {
            exact_svd(rows, dim)
        } else {
            randomized_svd(rows, dim, k, seed)
        };
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

        let mut components = Vec::with_capacity(k * dim);
        let mut singular_values = Vec::with_capacity(k);
        for &r in order.iter().take(k) {
            let mut row: Vec<f64> = vt.row(r).iter().copied().collect();
            let pivot = row.iter().enumerate().fold((0, 0.0f64), |best, (i, v)| {
                if v.abs() > best.1.abs() {
                    (i, *v)
                } else {
                    best
                }
            });
            if pivot.1 < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            components.extend(row);
            singular_values.push(sigma[r].max(0.0));
        }
        Ok(Self {
            k,
            dim,
            components,
            singular_values,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.dim..(i + 1) * self.dim]
    }

    /// `components · v`.
    pub fn project(&self, v: &SparseVector) -> Result<Vec<f64>> {
        if v.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.dim,
            });
        }
        Ok((0..self.k)
            .map(|r| v.dot_dense(self.component(r)))
            .collect())
    }
}

fn dense(rows: &[SparseVector], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), dim);
    for (i, r) in rows.iter().enumerate() {
        for &(j, v) in &r.entries {
            m[(i, j)] = v;
        }
    }
    m
}

fn exact_svd(rows: &[SparseVector], dim: usize) -> (DMatrix<f64>, Vec<f64>) {
    let svd = dense(rows, dim).svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    (vt, svd.singular_values.iter().copied().collect())
}

/// `X · m` for sparse X (rows) and dense m (dim × c).
fn mul(rows: &[SparseVector], m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), m.ncols());
    for (i, r) in rows.iter().enumerate() {
        for &(j, v) in &r.entries {
            for c in 0..m.ncols() {
                out[(i, c)] += v * m[(j, c)];
            }
        }
    }
    out
}

/// `Xᵀ · m` for sparse X (rows) and dense m (N × c).
fn mul_t(rows: &[SparseVector], dim: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, m.ncols());
    for (i, r) in rows.iter().enumerate() {
        for &(j, v) in &r.entries {
            for c in 0..m.ncols() {
                out[(j, c)] += v * m[(i, c)];
            }
        }
    }
    out
}

fn randomized_svd(
    rows: &[SparseVector],
    dim: usize,
    k: usize,
    seed: u64,
) -> (DMatrix<f64>, Vec<f64>) {
    let width = (k + OVERSAMPLING).min(rows.len().min(dim));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // filled column by column so the draw order is explicit
    let mut omega = DMatrix::zeros(dim, width);
    for c in 0..width {
        for r in 0..dim {
            omega[(r, c)] = StandardNormal.sample(&mut rng);
        }
    }
    let mut q = mul(rows, &omega).qr().q();
    for _ in 0..POWER_ITERATIONS {
        let z = mul_t(rows, dim, &q).qr().q();
        q = mul(rows, &z).qr().q();
    }
    let b = mul_t(rows, dim, &q).transpose();
    let svd = b.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    (vt, svd.singular_values.iter().copied().collect())
}

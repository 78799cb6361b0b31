//! Principal-component detector: squared projections onto the leading
//! eigenvectors of the training correlation matrix, each scaled by its
//! eigenvalue.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Eigenvalues at or below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    dim: usize,
    /// Columns with non-zero training variance.
    kept: Vec<usize>,
    mean: Vec<f64>,
    std: Vec<f64>,
    /// One row per component, over the kept columns.
    components: DenseMatrix,
    eigenvalues: Vec<f64>,
}

impl Pca {
    pub fn fit(x: &DenseMatrix, n_components: usize) -> Result<Self> {
        let (n, d) = x.shape();
        if n < 2 {
            return Err(Error::Insufficient {
                what: "training rows for pca",
                needed: 2,
                available: n,
            });
        }
        if n_components == 0 || n_components > d {
            return Err(Error::InvalidParameter(format!(
                "n_components {n_components} must be in 1..={d}"
            )));
        }
        let col_mean = x.row_mean()?;
        let mut kept = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        let mut dropped = Vec::new();
        for j in 0..d {
            let m = col_mean[j];
            let var = x.iter_rows().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / (n - 1) as f64;
            let s = var.sqrt();
            if s <= 1e-12 * m.abs().max(1.0) {
                dropped.push(j);
                continue;
            }
            kept.push(j);
            mean.push(m);
            std.push(s);
        }
        if !dropped.is_empty() {
            log::warn!("pca: dropping zero-variance columns {dropped:?}");
        }
        let k = kept.len();
        if k == 0 {
            return Err(Error::RankDeficient {
                requested: n_components,
                rank: 0,
            });
        }
        let mut z = DMatrix::<f64>::zeros(n, k);
        for (i, r) in x.iter_rows().enumerate() {
            for (c, &j) in kept.iter().enumerate() {
                z[(i, c)] = (r[j] - mean[c]) / std[c];
            }
        }
        let corr = (z.transpose() * &z) / (n - 1) as f64;
        let eig = SymmetricEigen::new(corr);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let lmax = eig.eigenvalues[order[0]].max(0.0);
        let rank = order
            .iter()
            .filter(|&&i| eig.eigenvalues[i] > RANK_TOL * lmax)
            .count();
        if n_components > rank {
            return Err(Error::RankDeficient {
                requested: n_components,
                rank,
            });
        }
        let mut components = DenseMatrix::zeros(n_components, k);
        let mut eigenvalues = Vec::with_capacity(n_components);
        for (c, &i) in order.iter().take(n_components).enumerate() {
            let v = eig.eigenvectors.column(i);
            components.row_mut(c).copy_from_slice(v.as_slice());
            eigenvalues.push(eig.eigenvalues[i]);
        }
        Ok(Self {
            dim: d,
            kept,
            mean,
            std,
            components,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn kept_columns(&self) -> &[usize] {
        &self.kept
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        let z: Vec<f64> = self
            .kept
            .iter()
            .enumerate()
            .map(|(c, &j)| (row[j] - self.mean[c]) / self.std[c])
            .collect();
        self.components
            .iter_rows()
            .zip(&self.eigenvalues)
            .map(|(v, l)| {
                let y = crate::numeric::dot(v, &z);
                y * y / l
            })
            .sum()
    }
}

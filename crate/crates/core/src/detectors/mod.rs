//! Unsupervised anomaly detectors with a contamination-quantile threshold.
//!
//! Every detector maps a row to a score where larger means more anomalous.
//! A fitted [`DetectorModel`] flags a row when its score is at least the
//! `(1 - contamination)` quantile of the training scores, estimated with
//! linear interpolation between order statistics.

mod cblof;
mod grid;
mod hbos;
mod iforest;
mod pca;

pub use cblof::{Cblof, CblofOptions};
pub use grid::{grid_report_csv, grid_search, GridCell, GridResult, GridSpec, GRID_CSV_HEADER};
pub use hbos::{FeatureHistogram, Hbos, HBOS_FLOOR};
pub use iforest::{average_path_length, IsolationForest};
pub use pca::Pca;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Pca,
    IForest,
    Cblof,
    Hbos,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [Self::Pca, Self::IForest, Self::Cblof, Self::Hbos];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pca => "pca",
            Self::IForest => "iforest",
            Self::Cblof => "cblof",
            Self::Hbos => "hbos",
        }
    }

    /// Name of the hyper-parameter the grid varies.
    pub fn parameter_name(self) -> &'static str {
        match self {
            Self::Pca => "n_components",
            Self::IForest => "n_estimators",
            Self::Cblof => "n_clusters",
            Self::Hbos => "n_bins",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown detector {s:?}")))
    }
}

/// Fitted scoring state of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scorer {
    Pca(Pca),
    #[serde(rename = "iforest")]
    IForest(IsolationForest),
    Cblof(Cblof),
    Hbos(Hbos),
}

impl Scorer {
    /// Fits `kind` with its single grid parameter. Randomised detectors draw
    /// from the detector stream of `seed`.
    pub fn fit(kind: DetectorKind, x: &DenseMatrix, param: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, rng::DETECTOR);
        Ok(match kind {
            DetectorKind::Pca => Self::Pca(Pca::fit(x, param)?),
            DetectorKind::IForest => Self::IForest(IsolationForest::fit(x, param, &mut rng)?),
            DetectorKind::Cblof => Self::Cblof(Cblof::fit(x, param, CblofOptions::default(), &mut rng)?),
            DetectorKind::Hbos => Self::Hbos(Hbos::fit(x, param)?),
        })
    }

    pub fn kind(&self) -> DetectorKind {
        match self {
            Self::Pca(_) => DetectorKind::Pca,
            Self::IForest(_) => DetectorKind::IForest,
            Self::Cblof(_) => DetectorKind::Cblof,
            Self::Hbos(_) => DetectorKind::Hbos,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pca(m) => m.dim(),
            Self::IForest(m) => m.dim(),
            Self::Cblof(m) => m.dim(),
            Self::Hbos(m) => m.dim(),
        }
    }

    pub fn score(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.rows() > 0 && x.cols() != self.dim() {
            return Err(Error::shape(
                "score",
                format!("{} features, detector was fitted on {}", x.cols(), self.dim()),
            ));
        }
        let scores: Vec<f64> = match self {
            Self::Pca(m) => x.iter_rows().map(|r| m.score_row(r)).collect(),
            Self::IForest(m) => x.iter_rows().map(|r| m.score_row(r)).collect(),
            Self::Cblof(m) => x.iter_rows().map(|r| m.score_row(r)).collect(),
            Self::Hbos(m) => x.iter_rows().map(|r| m.score_row(r)).collect(),
        };
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite {} score at row {i}",
                self.kind().as_str()
            )));
        }
        Ok(scores)
    }
}

pub fn validate_contamination(c: f64) -> Result<()> {
    if c > 0.0 && c <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("contamination {c} outside (0, 0.5]")))
    }
}

/// Quantile `q ∈ [0, 1]` with linear interpolation between order statistics
/// (position `q·(n-1)` in the sorted sample).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// A fitted detector together with its decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub scorer: Scorer,
    /// The grid parameter the scorer was fitted with.
    pub param: usize,
    pub contamination: f64,
    pub threshold: f64,
}

impl DetectorModel {
    pub fn fit(
        kind: DetectorKind,
        x: &DenseMatrix,
        param: usize,
        contamination: f64,
        seed: u64,
    ) -> Result<Self> {
        validate_contamination(contamination)?;
        let scorer = Scorer::fit(kind, x, param, seed)?;
        let train_scores = scorer.score(x)?;
        Self::with_threshold(scorer, param, &train_scores, contamination)
    }

    /// Wraps an already fitted scorer, thresholding its training scores.
    pub fn with_threshold(
        scorer: Scorer,
        param: usize,
        train_scores: &[f64],
        contamination: f64,
    ) -> Result<Self> {
        validate_contamination(contamination)?;
        let threshold = quantile(train_scores, 1.0 - contamination)?;
        Ok(Self {
            scorer,
            param,
            contamination,
            threshold,
        })
    }

    pub fn kind(&self) -> DetectorKind {
        self.scorer.kind()
    }

    /// Scores and flags (true = anomaly) for each row of `x`.
    pub fn predict(&self, x: &DenseMatrix) -> Result<(Vec<f64>, Vec<bool>)> {
        let scores = self.scorer.score(x)?;
        let flags = scores.iter().map(|&s| s >= self.threshold).collect();
        Ok((scores, flags))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests;

//! Histogram-based outlier score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Height assigned to empty bins before taking logs.
pub const HBOS_FLOOR: f64 = 1e-12;

/// Equal-width histogram of one training feature, heights scaled so the
/// tallest bin is 1. Constant features have no histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    pub min: f64,
    pub max: f64,
    pub heights: Vec<f64>,
}

impl FeatureHistogram {
    pub fn bin(&self, v: f64) -> usize {
        let n = self.heights.len();
        let t = (v - self.min) / (self.max - self.min) * n as f64;
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t.floor() as usize).min(n - 1)
        }
    }

    /// `-ln ĥ(v)`, floored.
    pub fn score(&self, v: f64) -> f64 {
        -self.heights[self.bin(v)].max(HBOS_FLOOR).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hbos {
    histograms: Vec<Option<FeatureHistogram>>,
}

impl Hbos {
    pub fn fit(x: &DenseMatrix, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidParameter(format!("n_bins {n_bins} must be at least 2")));
        }
        if x.rows() == 0 {
            return Err(Error::EmptyInput("hbos training set"));
        }
        let histograms = (0..x.cols())
            .map(|j| {
                let (min, max) = x
                    .iter_rows()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
                if max <= min {
                    return None;
                }
                let mut h = FeatureHistogram {
                    min,
                    max,
                    heights: vec![0.0; n_bins],
                };
                for r in x.iter_rows() {
                    let b = h.bin(r[j]);
                    h.heights[b] += 1.0;
                }
                let top = h.heights.iter().cloned().fold(0.0, f64::max);
                for v in &mut h.heights {
                    *v /= top;
                }
                Some(h)
            })
            .collect();
        Ok(Self { histograms })
    }

    pub fn dim(&self) -> usize {
        self.histograms.len()
    }

    pub fn histograms(&self) -> &[Option<FeatureHistogram>] {
        &self.histograms
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        self.histograms
            .iter()
            .zip(row)
            .filter_map(|(h, &v)| h.as_ref().map(|h| h.score(v)))
            .sum()
    }
}

//! Turns flow records into numeric edge-feature rows.
//!
//! Categorical columns are replaced by a code fitted on the training split
//! only, non-finite values become 0, and each row is scaled to unit L2 norm.
//! The fitted state serialises to a versioned JSON document that round-trips
//! bit-exactly.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FeatureKind, FeatureLayout, FlowRecord, Label};
use crate::numeric::DenseMatrix;

pub const ENCODER_FORMAT_VERSION: u32 = 1;

/// How categorical values are turned into numbers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoricalEncoding {
    /// Code = share of training rows carrying the category. Label-free.
    #[default]
    Frequency,
    /// Code = attack rate among training rows carrying the category.
    /// Needs labels; meant for benchmark comparisons.
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMap {
    pub feature: String,
    pub codes: BTreeMap<String, f64>,
    pub fallback: f64,
}

impl CategoryMap {
    pub fn code(&self, category: &str) -> f64 {
        self.codes.get(category).copied().unwrap_or(self.fallback)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub version: u32,
    pub encoding: CategoricalEncoding,
    pub layout: FeatureLayout,
    /// One map per categorical slot, in slot order.
    pub categorical_maps: Vec<CategoryMap>,
    pub fitted: bool,
}

/// Row normaliser. L2 scaling has no fitted state, so fitting on the
/// training split is a no-op.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalizer {
    #[default]
    L2,
}

impl Normalizer {
    pub fn apply(&self, row: &mut [f64]) {
        match self {
            Normalizer::L2 => {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
    }
}

/// Fits one [`CategoryMap`] per categorical column on `train`.
pub fn fit_encoder(
    layout: &FeatureLayout,
    train: &[FlowRecord],
    encoding: CategoricalEncoding,
) -> Result<FeatureEncoder> {
    if train.is_empty() {
        return Err(Error::EmptyInput("encoder training split"));
    }
    if encoding == CategoricalEncoding::Target && train.iter().any(|r| r.label.is_none()) {
        return Err(Error::MissingLabels("target encoding needs labelled training rows"));
    }
    let n = train.len() as f64;
    let categorical_maps = layout
        .columns
        .iter()
        .filter(|c| c.kind == FeatureKind::Categorical)
        .map(|column| {
            // (rows, attack rows) per category
            let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
            for r in train {
                let e = stats.entry(r.categorical[column.slot].as_str()).or_default();
                e.0 += 1;
                if r.label == Some(Label::Attack) {
                    e.1 += 1;
                }
            }
            let codes: BTreeMap<String, f64> = stats
                .into_iter()
                .map(|(cat, (count, attacks))| {
                    let code = match encoding {
                        CategoricalEncoding::Frequency => count as f64 / n,
                        CategoricalEncoding::Target => attacks as f64 / count as f64,
                    };
                    (cat.to_string(), code)
                })
                .collect();
            let fallback = match encoding {
                CategoricalEncoding::Frequency => {
                    codes.values().sum::<f64>() / codes.len() as f64
                }
                CategoricalEncoding::Target => {
                    train.iter().filter(|r| r.label == Some(Label::Attack)).count() as f64 / n
                }
            };
            CategoryMap {
                feature: column.name.clone(),
                codes,
                fallback,
            }
        })
        .collect();

    Ok(FeatureEncoder {
        version: ENCODER_FORMAT_VERSION,
        encoding,
        layout: layout.clone(),
        categorical_maps,
        fitted: true,
    })
}

impl FeatureEncoder {
    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Raw encoded values in layout order, before cleanup and scaling.
    pub fn encode_row(&self, record: &FlowRecord) -> Vec<f64> {
        self.layout
            .columns
            .iter()
            .map(|c| match c.kind {
                FeatureKind::Categorical => self.categorical_maps[c.slot].code(&record.categorical[c.slot]),
                FeatureKind::Numeric => record.numeric[c.slot],
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let enc: FeatureEncoder = serde_json::from_str(s)?;
        if enc.version != ENCODER_FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "encoder format version {} (expected {ENCODER_FORMAT_VERSION})",
                enc.version
            )));
        }
        Ok(enc)
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

/// Encodes, cleans and normalises `records`; row `i` of the result belongs
/// to `records[i]`.
pub fn transform(
    records: &[FlowRecord],
    encoder: &FeatureEncoder,
    normalizer: Normalizer,
) -> Result<DenseMatrix> {
    if !encoder.fitted {
        return Err(Error::InvalidConfig("feature encoder is not fitted".into()));
    }
    let dim = encoder.dim();
    let mut out = DenseMatrix::zeros(records.len(), dim);
    for (i, r) in records.iter().enumerate() {
        if r.categorical.len() != encoder.categorical_maps.len()
            || r.numeric.len() != encoder.layout.numeric_count()
        {
            return Err(Error::shape(
                "transform",
                format!("record {i} does not match the encoder's feature layout"),
            ));
        }
        let row = out.row_mut(i);
        for (dst, v) in row.iter_mut().zip(encoder.encode_row(r)) {
            *dst = if v.is_finite() { v } else { 0.0 };
        }
        normalizer.apply(row);
    }
    Ok(out)
}

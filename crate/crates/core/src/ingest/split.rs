use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{FlowRecord, Label};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contamination {
    /// Training split holds benign flows only.
    None,
    /// Training split holds attack flows at this proportion.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub downsample_fraction: f64,
    pub train_fraction: f64,
    pub contamination: Contamination,
    pub rng_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            downsample_fraction: 0.1,
            train_fraction: 0.7,
            contamination: Contamination::None,
            rng_seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = self.downsample_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidSplit(format!(
                "downsample_fraction {f} outside (0, 1]"
            )));
        }
        let t = self.train_fraction;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidSplit(format!(
                "train_fraction {t} outside (0, 1)"
            )));
        }
        if let Contamination::Fraction(c) = self.contamination {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidSplit(format!(
                    "contamination {c} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn train_size(&self, n: usize) -> usize {
        (self.train_fraction * n as f64).round() as usize
    }

    /// `ceil(c * train_size)`, tolerant of representation error in `c * n`.
    pub fn attack_quota(&self, train_size: usize) -> usize {
        match self.contamination {
            Contamination::None => 0,
            Contamination::Fraction(c) => (c * train_size as f64 - 1e-9).ceil().max(0.0) as usize,
        }
    }
}

/// Ascending indices of a uniform sample of `round(fraction * n)` rows.
pub fn downsample_indices(n: usize, spec: &SplitSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let keep = ((spec.downsample_fraction * n as f64).round() as usize).min(n);
    if keep == n {
        return Ok((0..n).collect());
    }
    let mut rng = rng::stream(spec.rng_seed, rng::DOWNSAMPLE);
    let mut idx = index::sample(&mut rng, n, keep).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

pub fn downsample(records: &[FlowRecord], spec: &SplitSpec) -> Result<Vec<FlowRecord>> {
    Ok(downsample_indices(records.len(), spec)?
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}

/// Partitions row indices into ascending `(train, test)` lists.
///
/// The train side has `round(train_fraction * n)` rows. Without
/// contamination it is drawn from benign rows only (unlabelled rows are
/// accepted when no row carries a label); with `Fraction(c)` it holds
/// `ceil(c * train_size)` attack rows and benign rows for the rest.
pub fn split_indices(labels: &[Option<Label>], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let n = labels.len();
    let train_size = spec.train_size(n);
    let labelled = labels.iter().filter(|l| l.is_some()).count();
    let mut rng = rng::stream(spec.rng_seed, rng::SPLIT);

    let mut train: Vec<usize> = if labelled == 0 {
        if spec.contamination != Contamination::None {
            return Err(Error::MissingLabels("contaminated splits need labelled records"));
        }
        index::sample(&mut rng, n, train_size).into_vec()
    } else {
        if labelled != n {
            return Err(Error::MissingLabels("some records are labelled and some are not"));
        }
        let (mut benign, mut attack): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| labels[i] == Some(Label::Benign));
        let attacks_needed = spec.attack_quota(train_size);
        let benign_needed = train_size - attacks_needed.min(train_size);
        if attack.len() < attacks_needed {
            return Err(Error::Insufficient {
                what: "attack records for the requested contamination",
                needed: attacks_needed,
                available: attack.len(),
            });
        }
        if benign.len() < benign_needed {
            return Err(Error::Insufficient {
                what: "benign records for the training split",
                needed: benign_needed,
                available: benign.len(),
            });
        }
        benign.shuffle(&mut rng);
        attack.shuffle(&mut rng);
        benign.truncate(benign_needed);
        attack.truncate(attacks_needed);
        benign.extend(attack);
        benign
    };
    train.sort_unstable();

    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

pub fn split(records: &[FlowRecord], spec: &SplitSpec) -> Result<(Vec<FlowRecord>, Vec<FlowRecord>)> {
    let labels: Vec<Option<Label>> = records.iter().map(|r| r.label).collect();
    let (train, test) = split_indices(&labels, spec)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| records[i].clone()).collect();
    Ok((pick(train), pick(test)))
}

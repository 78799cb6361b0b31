//! Binary detection metrics with attack as the positive class.

mod reference;
mod report;

pub use reference::{reference_table, ReferenceRow, REFERENCE_TABLES};
pub use report::{compare, render_reference, Comparison, ComparisonRow, EvalReport, InputKind, ReportRow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    /// Counts `flags[i]` (true = flagged as attack) against `labels[i]`.
    pub fn from_flags(flags: &[bool], labels: &[Label]) -> Result<Self> {
        if flags.len() != labels.len() {
            return Err(Error::shape(
                "confusion",
                format!("{} flags vs {} labels", flags.len(), labels.len()),
            ));
        }
        let mut c = Self::default();
        for (&f, l) in flags.iter().zip(labels) {
            match (f, l) {
                (true, Label::Attack) => c.tp += 1,
                (true, Label::Benign) => c.fp += 1,
                (false, Label::Benign) => c.tn += 1,
                (false, Label::Attack) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total(), "accuracy")
    }

    /// Recall of the attack class.
    pub fn detection_rate(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_, "detection rate")
    }

    pub fn f1_attack(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_, "attack F1")
    }

    pub fn f1_benign(&self) -> f64 {
        ratio(2 * self.tn, 2 * self.tn + self.fn_ + self.fp, "benign F1")
    }

    /// Unweighted mean of the two per-class F1 scores.
    pub fn macro_f1(&self) -> f64 {
        (self.f1_attack() + self.f1_benign()) / 2.0
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            accuracy: self.accuracy(),
            macro_f1: self.macro_f1(),
            detection_rate: self.detection_rate(),
        }
    }
}

fn ratio(num: u64, den: u64, what: &str) -> f64 {
    if den == 0 {
        log::info!("{what}: zero denominator, reported as 0");
        return 0.0;
    }
    num as f64 / den as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub detection_rate: f64,
}

pub fn metrics(flags: &[bool], labels: &[Label]) -> Result<(Confusion, Metrics)> {
    let c = Confusion::from_flags(flags, labels)?;
    Ok((c, c.metrics()))
}

/// Area under the ROC curve for `positive` scores ranked above `negative`
/// ones, counting ties as one half (Mann-Whitney U / (n_pos · n_neg)).
pub fn roc_auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::EmptyInput("roc_auc needs both classes"));
    }
    if positive.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("roc_auc: NaN score".into()));
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // average ranks over tie groups
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let np = positive.len() as f64;
    let nn = negative.len() as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Attack, Benign};

    #[test]
    fn worked_confusion() {
        let c = Confusion { tp: 8, fn_: 2, fp: 1, tn: 89 };
        // F1_attack = 16/19, F1_benign = 178/181
        assert!((c.accuracy() - 0.97).abs() < 1e-12);
        assert!((c.detection_rate() - 0.8).abs() < 1e-12);
        assert!((c.f1_attack() - 0.8421).abs() < 1e-4);
        assert!((c.f1_benign() - 0.9834).abs() < 1e-4);
        assert!((c.macro_f1() - 0.9128).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_all_benign() {
        let labels = [Attack, Benign, Benign, Attack];
        let (_, m) = metrics(&[true, false, false, true], &labels).unwrap();
        assert_eq!((m.accuracy, m.macro_f1, m.detection_rate), (1.0, 1.0, 1.0));
        let (_, m) = metrics(&[false; 4], &labels).unwrap();
        assert_eq!(m.detection_rate, 0.0);
        assert!(metrics(&[true], &labels).is_err());
    }

    #[test]
    fn degenerate_class_is_zero() {
        let (c, m) = metrics(&[false, false], &[Benign, Benign]).unwrap();
        assert_eq!(c.f1_attack(), 0.0);
        assert_eq!(m.macro_f1, 0.5);
    }

    #[test]
    fn auc_cases() {
        assert_eq!(roc_auc(&[2.0, 3.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(roc_auc(&[1.0, 1.0], &[1.0]).unwrap(), 0.5);
        // pairs: (2>1) (2<3) (4>1) (4>3) -> 3/4
        assert_eq!(roc_auc(&[2.0, 4.0], &[1.0, 3.0]).unwrap(), 0.75);
        assert!(roc_auc(&[], &[1.0]).is_err());
    }

    fn brute_auc(p: &[f64], n: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in p {
            for b in n {
                s += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
        s / (p.len() * n.len()) as f64
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(
            p in prop::collection::vec(0i32..5, 1..20),
            n in prop::collection::vec(0i32..5, 1..20),
        ) {
            let p: Vec<f64> = p.into_iter().map(f64::from).collect();
            let n: Vec<f64> = n.into_iter().map(f64::from).collect();
            prop_assert!((roc_auc(&p, &n).unwrap() - brute_auc(&p, &n)).abs() < 1e-12);
        }

        #[test]
        fn metrics_invariant_to_row_permutation(
            pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60),
            rot in 0usize..60,
        ) {
            let flags: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<Label> = pairs.iter().map(|p| if p.1 { Attack } else { Benign }).collect();
            let k = rot % pairs.len();
            let mut f2 = flags.clone();
            let mut l2 = labels.clone();
            f2.rotate_left(k);
            l2.rotate_left(k);
            prop_assert_eq!(metrics(&flags, &labels).unwrap(), metrics(&f2, &l2).unwrap());
        }
    }
}

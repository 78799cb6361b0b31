//! Exhaustive hyper-parameter × contamination search scored on labelled
//! validation data.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{validate_contamination, DetectorKind, DetectorModel, Scorer};
use crate::error::{Error, Result};
use crate::eval::{Confusion, Metrics};
use crate::ingest::Label;
use crate::numeric::DenseMatrix;

/// Parameter lists per detector plus the shared contamination list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub pca: Vec<usize>,
    pub iforest: Vec<usize>,
    pub cblof: Vec<usize>,
    pub hbos: Vec<usize>,
    pub contamination: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            pca: vec![2, 5, 10],
            iforest: vec![50, 100, 200],
            cblof: vec![2, 5, 8],
            hbos: vec![5, 10, 20],
            contamination: vec![0.01, 0.02, 0.04, 0.08],
        }
    }
}

impl GridSpec {
    pub fn params(&self, kind: DetectorKind) -> &[usize] {
        match kind {
            DetectorKind::Pca => &self.pca,
            DetectorKind::IForest => &self.iforest,
            DetectorKind::Cblof => &self.cblof,
            DetectorKind::Hbos => &self.hbos,
        }
    }

    /// Every problem with the spec, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for kind in DetectorKind::ALL {
            if self.params(kind).is_empty() {
                out.push(format!("grid.{} is empty", kind.as_str()));
            }
        }
        if self.contamination.is_empty() {
            out.push("grid.contamination is empty".into());
        }
        for &c in &self.contamination {
            if validate_contamination(c).is_err() {
                out.push(format!("grid.contamination value {c} outside (0, 0.5]"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub detector: DetectorKind,
    pub param: usize,
    pub contamination: f64,
    pub confusion: Option<Confusion>,
    pub metrics: Option<Metrics>,
    /// Why the cell could not be fitted.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: DetectorModel,
    pub best_metrics: Metrics,
    pub cells: Vec<GridCell>,
}

/// True if `a` beats `b`: higher macro F1, then higher detection rate, then
/// smaller parameter, then smaller contamination.
fn better(a: (&Metrics, usize, f64), b: (&Metrics, usize, f64)) -> bool {
    let (ma, pa, ca) = a;
    let (mb, pb, cb) = b;
    ma.macro_f1
        .total_cmp(&mb.macro_f1)
        .then(ma.detection_rate.total_cmp(&mb.detection_rate))
        .then(pb.cmp(&pa))
        .then(cb.total_cmp(&ca))
        .is_gt()
}

/// Fits `kind` once per parameter value on `train`, re-thresholds for every
/// contamination, and keeps the cell with the best validation macro F1.
/// Cells that fail to fit are reported, not fatal, unless all fail.
pub fn grid_search(
    kind: DetectorKind,
    params: &[usize],
    contaminations: &[f64],
    train: &DenseMatrix,
    validation: &DenseMatrix,
    labels: &[Label],
    seed: u64,
) -> Result<GridResult> {
    if params.is_empty() || contaminations.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &c in contaminations {
        validate_contamination(c)?;
    }
    if validation.rows() != labels.len() {
        return Err(Error::shape(
            "grid_search",
            format!("{} validation rows vs {} labels", validation.rows(), labels.len()),
        ));
    }

    let fitted: Vec<Result<(Scorer, Vec<f64>, Vec<f64>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = params
            .iter()
            .map(|&p| {
                s.spawn(move || {
                    let scorer = Scorer::fit(kind, train, p, seed)?;
                    let tr = scorer.score(train)?;
                    let va = scorer.score(validation)?;
                    Ok((scorer, tr, va))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("grid worker panicked")).collect()
    });

    let mut cells = Vec::with_capacity(params.len() * contaminations.len());
    let mut best: Option<(usize, usize, Metrics)> = None;
    let mut first_error = None;
    for (pi, (&param, fit)) in params.iter().zip(&fitted).enumerate() {
        for (ci, &contamination) in contaminations.iter().enumerate() {
            let mut cell = GridCell {
                detector: kind,
                param,
                contamination,
                confusion: None,
                metrics: None,
                error: None,
            };
            match fit {
                Ok((scorer, train_scores, val_scores)) => {
                    let model = DetectorModel::with_threshold(scorer.clone(), param, train_scores, contamination)?;
                    let flags: Vec<bool> = val_scores.iter().map(|&s| s >= model.threshold).collect();
                    let confusion = Confusion::from_flags(&flags, labels)?;
                    let m = confusion.metrics();
                    let wins = match &best {
                        None => true,
                        Some((bp, bc, bm)) => {
                            better((&m, param, contamination), (bm, params[*bp], contaminations[*bc]))
                        }
                    };
                    if wins {
                        best = Some((pi, ci, m));
                    }
                    cell.confusion = Some(confusion);
                    cell.metrics = Some(m);
                }
                Err(e) => {
                    log::warn!("{} {}={param}: {e}", kind.as_str(), kind.parameter_name());
                    first_error.get_or_insert_with(|| e.to_string());
                    cell.error = Some(e.to_string());
                }
            }
            cells.push(cell);
        }
    }

    let (pi, ci, best_metrics) = best.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "every {} grid cell failed; first error: {}",
            kind.as_str(),
            first_error.unwrap_or_default()
        ))
    })?;
    let (scorer, train_scores, _) = fitted.into_iter().nth(pi).expect("index in range")?;
    let best = DetectorModel::with_threshold(scorer, params[pi], &train_scores, contaminations[ci])?;
    Ok(GridResult {
        best,
        best_metrics,
        cells,
    })
}

impl GridResult {
    /// One line per cell: `detector,parameter,value,contamination,accuracy,macro_f1,detection_rate,error`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        write_csv_rows(&mut s, &self.cells);
        s
    }
}

pub const GRID_CSV_HEADER: &str =
    "detector,parameter,value,contamination,accuracy,macro_f1,detection_rate,error\n";

pub(crate) fn write_csv_rows(s: &mut String, cells: &[GridCell]) {
    if s.is_empty() {
        s.push_str(GRID_CSV_HEADER);
    }
    for c in cells {
        let (a, f, d) = c
            .metrics
            .map(|m| {
                (
                    format!("{:.6}", m.accuracy),
                    format!("{:.6}", m.macro_f1),
                    format!("{:.6}", m.detection_rate),
                )
            })
            .unwrap_or_default();
        let err = c.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(
            s,
            "{},{},{},{},{a},{f},{d},{err}",
            c.detector.as_str(),
            c.detector.parameter_name(),
            c.param,
            c.contamination
        );
    }
}

/// Concatenated CSV for several searches.
pub fn grid_report_csv<'a>(results: impl IntoIterator<Item = &'a [GridCell]>) -> String {
    let mut s = String::from(GRID_CSV_HEADER);
    for cells in results {
        write_csv_rows(&mut s, cells);
    }
    s
}

//! Evaluation reports and the raw-vs-embedding comparison table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Confusion, Metrics, ReferenceRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Raw,
    Embeddings,
}

impl InputKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InputKind::Raw => "raw",
            InputKind::Embeddings => "embeddings",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub detector: String,
    pub input: InputKind,
    pub confusion: Confusion,
    pub metrics: Metrics,
}

impl ReportRow {
    pub fn new(detector: impl Into<String>, input: InputKind, confusion: Confusion) -> Self {
        Self {
            detector: detector.into(),
            input,
            confusion,
            metrics: confusion.metrics(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn get(&self, detector: &str, input: InputKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.detector == detector && r.input == input)
    }

    pub fn filter(&self, input: InputKind) -> EvalReport {
        EvalReport {
            rows: self.rows.iter().filter(|r| r.input == input).cloned().collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("detector,input,accuracy,macro_f1,detection_rate,tp,fp,tn,fn\n");
        for r in &self.rows {
            let c = r.confusion;
            let m = r.metrics;
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{},{},{},{}",
                r.detector,
                r.input.as_str(),
                m.accuracy,
                m.macro_f1,
                m.detection_rate,
                c.tp,
                c.fp,
                c.tn,
                c.fn_
            );
        }
        s
    }

    /// One JSON object per row.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub detector: String,
    pub raw: Metrics,
    pub embeddings: Metrics,
}

impl ComparisonRow {
    /// Embeddings minus raw, in Acc / Macro F1 / DR order.
    pub fn deltas(&self) -> [f64; 3] {
        [
            self.embeddings.accuracy - self.raw.accuracy,
            self.embeddings.macro_f1 - self.raw.macro_f1,
            self.embeddings.detection_rate - self.raw.detection_rate,
        ]
    }
}

/// Side-by-side raw vs embedding metrics, one row per detector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Pairs the rows of two reports by detector, in the raw report's order.
pub fn compare(raw: &EvalReport, embeddings: &EvalReport) -> Result<Comparison> {
    if raw.rows.len() != embeddings.rows.len() {
        return Err(Error::InvalidParameter(format!(
            "raw report has {} detectors, embedding report {}",
            raw.rows.len(),
            embeddings.rows.len()
        )));
    }
    let rows = raw
        .rows
        .iter()
        .map(|r| {
            let e = embeddings
                .rows
                .iter()
                .find(|e| e.detector == r.detector)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("detector {} missing from embedding report", r.detector))
                })?;
            Ok(ComparisonRow {
                detector: r.detector.clone(),
                raw: r.metrics,
                embeddings: e.metrics,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Comparison { rows })
}

fn pct(m: &Metrics) -> [f64; 3] {
    [m.accuracy * 100.0, m.macro_f1 * 100.0, m.detection_rate * 100.0]
}

fn render(rows: &[(String, [f64; 3], [f64; 3], Option<[f64; 3]>)]) -> String {
    let with_delta = rows.iter().any(|r| r.3.is_some());
    let mut s = String::new();
    let _ = write!(
        s,
        "{:<10} | {:>25} | {:>25}",
        "", "Raw Features", "Embeddings"
    );
    if with_delta {
        let _ = write!(s, " | {:>25}", "Delta");
    }
    s.push('\n');
    let _ = write!(s, "{:<10}", "Algorithm");
    let groups = if with_delta { 3 } else { 2 };
    for _ in 0..groups {
        let _ = write!(s, " | {:>7} {:>8} {:>8}", "Acc", "Macro F1", "DR");
    }
    s.push('\n');
    let width = s.lines().last().map_or(0, str::len);
    s.push_str(&"-".repeat(width));
    s.push('\n');
    for (name, raw, emb, delta) in rows {
        let _ = write!(s, "{name:<10}");
        for v in [raw, emb].into_iter().chain(delta.as_ref()) {
            let _ = write!(s, " | {:>7.2} {:>8.2} {:>8.2}", v[0], v[1], v[2]);
        }
        s.push('\n');
    }
    s
}

impl Comparison {
    /// Aligned plain-text table in percent, with embedding-minus-raw deltas.
    pub fn to_text(&self) -> String {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                let d = r.deltas().map(|x| x * 100.0);
                (r.detector.clone(), pct(&r.raw), pct(&r.embeddings), Some(d))
            })
            .collect();
        render(&rows)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "detector,raw_accuracy,raw_macro_f1,raw_detection_rate,emb_accuracy,emb_macro_f1,emb_detection_rate,delta_accuracy,delta_macro_f1,delta_detection_rate\n",
        );
        for r in &self.rows {
            let d = r.deltas();
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.detector,
                r.raw.accuracy,
                r.raw.macro_f1,
                r.raw.detection_rate,
                r.embeddings.accuracy,
                r.embeddings.macro_f1,
                r.embeddings.detection_rate,
                d[0],
                d[1],
                d[2]
            );
        }
        s
    }
}

/// Renders published reference rows in the same layout as [`Comparison::to_text`].
pub fn render_reference(rows: &[ReferenceRow]) -> String {
    let rows: Vec<_> = rows
        .iter()
        .map(|r| (r.detector.to_string(), r.raw, r.embeddings, None))
        .collect();
    render(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::reference_table;

    fn report(input: InputKind, tp: u64) -> EvalReport {
        let mut r = EvalReport::default();
        for name in ["pca", "hbos"] {
            r.push(ReportRow::new(name, input, Confusion { tp, fp: 1, tn: 89, fn_: 10 - tp }));
        }
        r
    }

    #[test]
    fn identical_reports_have_zero_deltas() {
        let a = report(InputKind::Raw, 8);
        let c = compare(&a, &a).unwrap();
        for row in &c.rows {
            assert_eq!(row.deltas(), [0.0; 3]);
        }
    }

    #[test]
    fn layout_columns() {
        let c = compare(&report(InputKind::Raw, 5), &report(InputKind::Embeddings, 8)).unwrap();
        let text = c.to_text();
        let header: Vec<&str> = text.lines().collect();
        assert!(header[0].contains("Raw Features") && header[0].contains("Embeddings"));
        assert_eq!(header[1].matches("Macro F1").count(), 3);
        assert!(text.contains("hbos"));
        assert_eq!(c.to_csv().lines().count(), 3);
    }

    #[test]
    fn reference_renders() {
        let t = render_reference(reference_table("nf-unsw-nb15-v2", 0).unwrap());
        let hbos = t.lines().find(|l| l.starts_with("hbos")).unwrap();
        assert!(hbos.contains("98.18") && hbos.contains("88.45") && hbos.contains("80.36"));
    }

    #[test]
    fn missing_detector_errors() {
        let a = report(InputKind::Raw, 8);
        let mut b = report(InputKind::Embeddings, 8);
        b.rows[1].detector = "cblof".into();
        assert!(compare(&a, &b).is_err());
    }

    #[test]
    fn jsonl_lines() {
        let r = report(InputKind::Raw, 8);
        let j = r.to_jsonl().unwrap();
        assert_eq!(j.lines().count(), 2);
        let back: ReportRow = serde_json::from_str(j.lines().next().unwrap()).unwrap();
        assert_eq!(back, r.rows[0]);
    }
}

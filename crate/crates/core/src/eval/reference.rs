//! Published reference scores (percent) for the NetFlow v2 benchmarks.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub detector: &'static str,
    /// Accuracy, Macro F1, DR on raw features.
    pub raw: [f64; 3],
    /// Accuracy, Macro F1, DR on edge embeddings.
    pub embeddings: [f64; 3],
}

const fn row(detector: &'static str, raw: [f64; 3], embeddings: [f64; 3]) -> ReferenceRow {
    ReferenceRow { detector, raw, embeddings }
}

/// `(dataset id, training contamination %, rows)`.
pub const REFERENCE_TABLES: &[(&str, u32, [ReferenceRow; 4])] = &[
    (
        "nf-unsw-nb15-v2",
        0,
        [
            row("pca", [94.45, 70.99, 56.87], [97.64, 83.59, 64.20]),
            row("iforest", [89.64, 66.37, 81.17], [97.91, 85.62, 68.76]),
            row("cblof", [94.12, 68.48, 49.37], [97.70, 84.17, 65.97]),
            row("hbos", [94.47, 71.34, 58.24], [98.18, 88.45, 80.36]),
        ],
    ),
    (
        "nf-unsw-nb15-v2",
        4,
        [
            row("pca", [91.11, 65.64, 63.01], [98.63, 92.18, 97.86]),
            row("iforest", [91.46, 67.03, 67.60], [98.66, 92.35, 98.77]),
            row("cblof", [95.28, 71.73, 50.42], [98.57, 91.70, 95.72]),
            row("hbos", [91.59, 66.90, 65.67], [98.62, 91.89, 94.92]),
        ],
    ),
    (
        "nf-cse-cic-ids2018-v2",
        0,
        [
            row("pca", [88.30, 76.84, 75.13], [97.82, 94.43, 82.67]),
            row("iforest", [92.06, 81.77, 70.82], [98.18, 95.39, 85.38]),
            row("cblof", [94.42, 87.41, 82.78], [97.83, 94.44, 82.67]),
            row("hbos", [94.01, 86.28, 79.28], [97.72, 94.51, 88.55]),
        ],
    ),
    (
        "nf-cse-cic-ids2018-v2",
        4,
        [
            row("pca", [85.91, 73.76, 74.71], [97.11, 92.57, 79.16]),
            row("iforest", [86.10, 74.09, 75.39], [89.79, 81.11, 91.84]),
            row("cblof", [94.61, 86.18, 69.16], [97.80, 94.38, 82.67]),
            row("hbos", [88.81, 78.82, 84.22], [96.86, 91.89, 77.79]),
        ],
    ),
];

pub fn reference_table(dataset: &str, contamination_pct: u32) -> Option<&'static [ReferenceRow; 4]> {
    REFERENCE_TABLES
        .iter()
        .find(|(d, c, _)| d.eq_ignore_ascii_case(dataset) && *c == contamination_pct)
        .map(|(_, _, rows)| rows)
}

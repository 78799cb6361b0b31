use super::*;
use crate::ingest::Label;
use crate::synthetic::{blob_with_outlier, gaussian_blob, labelled_anomalies, satellite_clusters};
use proptest::prelude::*;

fn blob(n: usize, dim: usize, seed: u64) -> DenseMatrix {
    gaussian_blob(n, &vec![0.0; dim], 1.0, &mut rng::stream(seed, 77))
}

#[test]
fn quantile_interpolates_linearly() {
    let v = [4.0, 1.0, 3.0, 2.0];
    assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
    assert_eq!(quantile(&v, 0.75).unwrap(), 3.25);
    assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
    assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
    assert_eq!(quantile(&[7.0], 0.3).unwrap(), 7.0);
    assert!(quantile(&[], 0.5).is_err());
}

#[test]
fn contamination_bounds() {
    let x = blob(20, 2, 1);
    for c in [0.0, -0.1, 0.51, f64::NAN] {
        assert!(DetectorModel::fit(DetectorKind::Hbos, &x, 5, c, 0).is_err());
    }
    assert!(DetectorModel::fit(DetectorKind::Hbos, &x, 5, 0.5, 0).is_ok());
}

#[test]
fn flagged_training_fraction_tracks_contamination() {
    let n = 10_000;
    let x = blob(n, 4, 2);
    let tol = 2.0 / (n as f64).sqrt();
    for (kind, param) in [
        (DetectorKind::Pca, 3),
        (DetectorKind::IForest, 50),
        (DetectorKind::Cblof, 4),
        (DetectorKind::Hbos, 10),
    ] {
        for c in [0.01, 0.05, 0.1] {
            let m = DetectorModel::fit(kind, &x, param, c, 1).unwrap();
            let (_, flags) = m.predict(&x).unwrap();
            let frac = flags.iter().filter(|f| **f).count() as f64 / n as f64;
            assert!((frac - c).abs() <= tol, "{kind:?} c={c}: {frac}");
        }
    }
}

#[test]
fn predict_contract() {
    let x = blob(50, 3, 3);
    for kind in DetectorKind::ALL {
        let m = DetectorModel::fit(kind, &x, 2, 0.1, 0).unwrap();
        let (s, f) = m.predict(&DenseMatrix::zeros(0, 3)).unwrap();
        assert!(s.is_empty() && f.is_empty());
        assert!(m.predict(&DenseMatrix::zeros(2, 4)).is_err());
        assert_eq!(m.predict(&x).unwrap(), m.predict(&x).unwrap());
        let back = DetectorModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
    }
}

#[test]
fn detector_names_round_trip() {
    for k in DetectorKind::ALL {
        assert_eq!(DetectorKind::parse(k.as_str()).unwrap(), k);
    }
    assert!(DetectorKind::parse("ocsvm").is_err());
}

// ---- isolation forest

#[test]
fn average_path_length_values() {
    assert_eq!(average_path_length(1), 0.0);
    assert_eq!(average_path_length(2), 1.0);
    // 2 (ln 255 + γ) - 2·255/256
    assert!((average_path_length(256) - 10.2448).abs() < 1e-3);
}

#[test]
fn iforest_ranks_the_planted_outlier_first() {
    for seed in [1, 2, 3] {
        let (x, at) = blob_with_outlier(300, 4, seed);
        let f = Scorer::fit(DetectorKind::IForest, &x, 100, seed).unwrap();
        let s = f.score(&x).unwrap();
        let top = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        assert_eq!(top, at, "seed {seed}");
        assert!(s.iter().enumerate().all(|(i, &v)| i == at || v < s[at]));
    }
}

#[test]
fn iforest_duplicate_rows_score_equal() {
    let mut rows = blob(100, 3, 4).to_rows();
    rows.push(rows[10].clone());
    let x = DenseMatrix::from_rows(&rows).unwrap();
    let s = Scorer::fit(DetectorKind::IForest, &x, 30, 0).unwrap().score(&x).unwrap();
    assert_eq!(s[10], s[100]);
}

#[test]
fn iforest_needs_two_rows() {
    assert!(Scorer::fit(DetectorKind::IForest, &DenseMatrix::zeros(1, 2), 10, 0).is_err());
    let s = Scorer::fit(DetectorKind::IForest, &DenseMatrix::zeros(5, 2), 10, 0).unwrap();
    // all rows identical: every tree is a single leaf of size 5
    let want = (-average_path_length(5) / average_path_length(5)).exp2();
    assert_eq!(s.score(&DenseMatrix::zeros(1, 2)).unwrap(), vec![want]);
}

// ---- hbos

fn brute_hbos(train: &DenseMatrix, n_bins: usize, row: &[f64]) -> f64 {
    let mut total = 0.0;
    for j in 0..train.cols() {
        let col: Vec<f64> = train.iter_rows().map(|r| r[j]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            continue;
        }
        let bin = |v: f64| {
            let t = (v - lo) / (hi - lo) * n_bins as f64;
            if t < 0.0 { 0 } else { (t.floor() as usize).min(n_bins - 1) }
        };
        let mut counts = vec![0usize; n_bins];
        for &v in &col {
            counts[bin(v)] += 1;
        }
        let top = *counts.iter().max().unwrap() as f64;
        let h = counts[bin(row[j])] as f64 / top;
        total += -h.max(HBOS_FLOOR).ln();
    }
    total
}

#[test]
fn hbos_matches_brute_force() {
    let train = blob(500, 5, 5);
    let test = blob(100, 5, 6).map(|v| v * 1.5);
    for bins in [2, 7, 20] {
        let m = Hbos::fit(&train, bins).unwrap();
        for r in test.iter_rows().chain(train.iter_rows()) {
            assert_eq!(m.score_row(r), brute_hbos(&train, bins, r));
        }
    }
}

#[test]
fn hbos_is_additive_over_features() {
    let train = blob(200, 3, 7);
    let m = Hbos::fit(&train, 8).unwrap();
    for r in train.iter_rows().take(20) {
        let parts: f64 = m
            .histograms()
            .iter()
            .zip(r)
            .map(|(h, &v)| h.as_ref().unwrap().score(v))
            .sum();
        assert_eq!(parts, m.score_row(r));
    }
}

#[test]
fn hbos_edge_cases() {
    let train = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 1.0], [10.0, 1.0]]).unwrap();
    let m = Hbos::fit(&train, 3).unwrap();
    // bins [0, 3.3) [3.3, 6.7) [6.7, 10] hold 2, 0, 1; column 2 is constant
    assert!(m.histograms()[1].is_none());
    assert_eq!(m.score_row(&[0.0, 1.0]), 0.0);
    assert!((m.score_row(&[5.0, 99.0]) - 27.631).abs() < 1e-3);
    assert!((m.score_row(&[10.0, 1.0]) - 2f64.ln()).abs() < 1e-12);
    // outside the training range -> edge bins
    assert_eq!(m.score_row(&[-50.0, 1.0]), 0.0);
    assert_eq!(m.score_row(&[50.0, 1.0]), m.score_row(&[10.0, 1.0]));
    assert!(Hbos::fit(&train, 1).is_err());
}

// ---- pca

fn mahalanobis_sq(train: &DenseMatrix, x: &[f64]) -> f64 {
    let (n, d) = train.shape();
    let mu = train.row_mean().unwrap();
    let mut cov = vec![vec![0.0; 2 * d]; d];
    for r in train.iter_rows() {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (r[a] - mu[a]) * (r[b] - mu[b]) / (n - 1) as f64;
            }
        }
    }
    // Gauss-Jordan on [Σ | I]
    for (a, row) in cov.iter_mut().enumerate() {
        row[d + a] = 1.0;
    }
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| cov[i][c].abs().total_cmp(&cov[j][c].abs())).unwrap();
        cov.swap(c, p);
        let piv = cov[c][c];
        for v in cov[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..d {
            if r != c {
                let f = cov[r][c];
                let src = cov[c].clone();
                for (v, s) in cov[r].iter_mut().zip(&src) {
                    *v -= f * s;
                }
            }
        }
    }
    let diff: Vec<f64> = x.iter().zip(&mu).map(|(a, b)| a - b).collect();
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            s += diff[a] * cov[a][d + b] * diff[b];
        }
    }
    s
}

fn correlated(n: usize, seed: u64) -> DenseMatrix {
    let base = blob(n, 3, seed);
    let rows: Vec<Vec<f64>> = base
        .iter_rows()
        .map(|r| vec![2.0 * r[0] + 5.0, r[0] - 0.5 * r[1], 0.3 * r[2] + r[1] - 1.0])
        .collect();
    DenseMatrix::from_rows(&rows).unwrap()
}

#[test]
fn pca_train_mean_scores_zero() {
    let x = correlated(200, 8);
    let m = Pca::fit(&x, 2).unwrap();
    assert_eq!(m.score_row(&x.row_mean().unwrap()), 0.0);
}

#[test]
fn pca_full_rank_is_mahalanobis() {
    let x = correlated(300, 9);
    let m = Pca::fit(&x, 3).unwrap();
    let probe = blob(50, 3, 10).map(|v| v * 3.0);
    for r in probe.iter_rows().chain(x.iter_rows().take(50)) {
        assert!((m.score_row(r) - mahalanobis_sq(&x, r)).abs() < 1e-8);
    }
}

#[test]
fn pca_full_rank_is_rotation_invariant() {
    let x = correlated(300, 11);
    let (a, b) = (0.7f64, -1.2f64);
    // rotation about z then about x
    let rz = [[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]];
    let rx = [[1.0, 0.0, 0.0], [0.0, b.cos(), -b.sin()], [0.0, b.sin(), b.cos()]];
    let rot = |r: &[f64]| -> Vec<f64> {
        let t: Vec<f64> = (0..3).map(|i| (0..3).map(|k| rz[i][k] * r[k]).sum()).collect();
        (0..3).map(|i| (0..3).map(|k| rx[i][k] * t[k]).sum()).collect()
    };
    let xr = DenseMatrix::from_rows(&x.iter_rows().map(rot).collect::<Vec<_>>()).unwrap();
    let m = Pca::fit(&x, 3).unwrap();
    let mr = Pca::fit(&xr, 3).unwrap();
    for r in x.iter_rows() {
        assert!((m.score_row(r) - mr.score_row(&rot(r))).abs() < 1e-8);
    }
}

#[test]
fn pca_origin_of_isotropic_blob_is_inlier() {
    let x = blob(2000, 2, 12);
    for c in [0.01, 0.05, 0.1] {
        let m = DetectorModel::fit(DetectorKind::Pca, &x, 2, c, 0).unwrap();
        let (_, flags) = m.predict(&DenseMatrix::zeros(1, 2)).unwrap();
        assert!(!flags[0]);
    }
}

#[test]
fn pca_drops_constant_columns_and_checks_rank() {
    let rows: Vec<Vec<f64>> = blob(50, 2, 13).iter_rows().map(|r| vec![r[0], 4.0, r[1]]).collect();
    let x = DenseMatrix::from_rows(&rows).unwrap();
    let m = Pca::fit(&x, 2).unwrap();
    assert_eq!(m.kept_columns(), &[0, 2]);
    assert!(matches!(Pca::fit(&x, 3), Err(Error::RankDeficient { requested: 3, rank: 2 })));

    let rows: Vec<Vec<f64>> = blob(50, 1, 14).iter_rows().map(|r| vec![r[0], 2.0 * r[0]]).collect();
    let collinear = DenseMatrix::from_rows(&rows).unwrap();
    assert!(matches!(Pca::fit(&collinear, 2), Err(Error::RankDeficient { rank: 1, .. })));
    assert!(Pca::fit(&collinear, 1).is_ok());
    assert!(Pca::fit(&collinear, 0).is_err());
}

// ---- cblof

fn two_blobs(seed: u64) -> DenseMatrix {
    let mut r = rng::stream(seed, 78);
    let a = gaussian_blob(60, &[0.0, 0.0], 0.5, &mut r);
    let b = gaussian_blob(60, &[20.0, 20.0], 0.5, &mut r);
    DenseMatrix::from_rows(&[a.to_rows(), b.to_rows()].concat()).unwrap()
}

#[test]
fn cblof_two_blobs_score_own_centroid_distance() {
    let x = two_blobs(1);
    let Scorer::Cblof(m) = Scorer::fit(DetectorKind::Cblof, &x, 2, 1).unwrap() else {
        unreachable!()
    };
    assert_eq!(m.n_large(), 2);
    assert_eq!(m.sizes(), &[60, 60]);
    for r in x.iter_rows() {
        let own = if r[0] < 10.0 { 0 } else { 1 };
        let c = m.centroids().iter_rows().position(|c| (c[0] < 10.0) == (own == 0)).unwrap();
        let d = squared_distance(r, m.centroids().row(c)).sqrt();
        assert_eq!(m.score_row(r), d);
    }
    assert_eq!(m.score_row(m.centroids().row(0)), 0.0);
}

#[test]
fn cblof_satellites_score_above_median() {
    for seed in [1, 2, 3] {
        let (x, sats) = satellite_clusters(seed);
        assert_eq!(x.rows(), 103);
        let s = Scorer::fit(DetectorKind::Cblof, &x, 3, seed).unwrap();
        let Scorer::Cblof(m) = &s else { unreachable!() };
        assert_eq!(m.n_large(), 2, "seed {seed}: sizes {:?}", m.sizes());
        let scores = s.score(&x).unwrap();
        let median = quantile(&scores, 0.5).unwrap();
        for &i in &sats {
            let nearest_large = (0..2)
                .map(|c| squared_distance(x.row(i), m.centroids().row(c)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(scores[i], nearest_large);
            assert!(scores[i] > median);
        }
    }
}

#[test]
fn cblof_weighting_and_bounds() {
    let x = two_blobs(2);
    let mut r = rng::stream(0, 1);
    let w = Cblof::fit(&x, 2, CblofOptions { weighted: true, ..Default::default() }, &mut r).unwrap();
    let mut r = rng::stream(0, 1);
    let u = Cblof::fit(&x, 2, CblofOptions::default(), &mut r).unwrap();
    for row in x.iter_rows().take(5) {
        assert_eq!(w.score_row(row), u.score_row(row) * 60.0);
    }
    assert!(Scorer::fit(DetectorKind::Cblof, &x, 1, 0).is_err());
    assert!(Scorer::fit(DetectorKind::Cblof, &x, 121, 0).is_err());
}

#[test]
fn cblof_too_few_distinct_points_is_an_error() {
    let x = DenseMatrix::from_rows(&[[0.0], [0.0], [0.0], [1.0]]).unwrap();
    assert!(matches!(Scorer::fit(DetectorKind::Cblof, &x, 3, 0), Err(Error::EmptyCluster(_))));
}

// ---- grid

#[test]
fn single_cell_grid_returns_that_model() {
    let (x, labels) = labelled_anomalies(400, 3, 0.05, 1);
    let g = grid_search(DetectorKind::Hbos, &[10], &[0.05], &x, &x, &labels, 0).unwrap();
    assert_eq!(g.cells.len(), 1);
    assert_eq!(g.best, DetectorModel::fit(DetectorKind::Hbos, &x, 10, 0.05, 0).unwrap());
}

#[test]
fn grid_picks_true_contamination() {
    let (train, _) = labelled_anomalies(2000, 3, 0.04, 2);
    let (val, labels) = labelled_anomalies(2000, 3, 0.04, 3);
    for kind in [DetectorKind::Pca, DetectorKind::Hbos, DetectorKind::IForest] {
        let g = grid_search(kind, &[3], &[0.02, 0.04, 0.08], &train, &val, &labels, 0).unwrap();
        assert_eq!(g.best.contamination, 0.04, "{kind:?}");
        assert_eq!(g.cells.len(), 3);
    }
}

#[test]
fn dominated_cell_does_not_change_winner() {
    let (train, _) = labelled_anomalies(1000, 3, 0.04, 4);
    let (val, labels) = labelled_anomalies(1000, 3, 0.04, 5);
    let base = grid_search(DetectorKind::Hbos, &[10], &[0.04], &train, &val, &labels, 0).unwrap();
    // 0.5 flags half the data, far worse
    let more = grid_search(DetectorKind::Hbos, &[10], &[0.04, 0.5], &train, &val, &labels, 0).unwrap();
    assert_eq!(base.best, more.best);
}

#[test]
fn grid_reports_failed_cells() {
    let (x, labels) = labelled_anomalies(300, 3, 0.05, 6);
    let g = grid_search(DetectorKind::Pca, &[2, 7], &[0.05], &x, &x, &labels, 0).unwrap();
    assert_eq!(g.cells.len(), 2);
    assert!(g.cells[1].error.is_some());
    assert_eq!(g.best.param, 2);
    let csv = g.to_csv();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("pca,n_components,7,0.05,,,,"));
    assert!(grid_search(DetectorKind::Pca, &[7], &[0.05], &x, &x, &labels, 0).is_err());
    assert!(matches!(
        grid_search(DetectorKind::Pca, &[], &[0.05], &x, &x, &labels, 0),
        Err(Error::EmptyGrid)
    ));
}

#[test]
fn grid_tie_prefers_smaller_parameter() {
    // perfectly separable: every cell scores the same
    let (x, labels) = labelled_anomalies(500, 2, 0.04, 7);
    let g = grid_search(DetectorKind::Pca, &[2, 1], &[0.04], &x, &x, &labels, 0).unwrap();
    let m: Vec<_> = g.cells.iter().map(|c| c.metrics.unwrap().macro_f1).collect();
    if m[0] == m[1] {
        assert_eq!(g.best.param, 1);
    }
    assert_eq!(labels.iter().filter(|l| **l == Label::Attack).count(), 20);
}

#[test]
fn grid_spec_problems_listed() {
    let spec = GridSpec {
        pca: vec![],
        contamination: vec![0.7, 0.0],
        ..GridSpec::default()
    };
    assert_eq!(spec.problems().len(), 3);
    assert!(GridSpec::default().problems().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scores_are_permutation_equivariant(seed in 0u64..500, shift in 1usize..40) {
        let train = blob(80, 3, seed);
        let test = blob(40, 3, seed + 1);
        let mut rows = test.to_rows();
        rows.rotate_left(shift % 40);
        let permuted = DenseMatrix::from_rows(&rows).unwrap();
        for kind in DetectorKind::ALL {
            let s = Scorer::fit(kind, &train, 2, seed).unwrap();
            let mut a = s.score(&test).unwrap();
            a.rotate_left(shift % 40);
            prop_assert_eq!(a, s.score(&permuted).unwrap());
        }
    }

    #[test]
    fn hbos_and_pca_ignore_training_row_order(seed in 0u64..500, shift in 1usize..60) {
        let train = blob(60, 3, seed);
        let mut rows = train.to_rows();
        rows.rotate_left(shift);
        let shuffled = DenseMatrix::from_rows(&rows).unwrap();
        let probe = blob(10, 3, seed + 7);
        let h1 = Scorer::fit(DetectorKind::Hbos, &train, 6, 0).unwrap();
        let h2 = Scorer::fit(DetectorKind::Hbos, &shuffled, 6, 0).unwrap();
        prop_assert_eq!(h1.score(&probe).unwrap(), h2.score(&probe).unwrap());
        // summation order moves the last few bits
        let p1 = Scorer::fit(DetectorKind::Pca, &train, 3, 0).unwrap().score(&probe).unwrap();
        let p2 = Scorer::fit(DetectorKind::Pca, &shuffled, 3, 0).unwrap().score(&probe).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}

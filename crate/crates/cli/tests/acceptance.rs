//! Acceptance checks. Prints one PASS / FAIL / SKIP line per criterion and
//! exits non-zero if any check fails.
//!
//! The dataset-scale directional check runs only when `ANOMALE_UNSW_CSV`
//! points at an NF-UNSW-NB15-v2 CSV.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use anomale_cli::config::{Mode, PipelineConfig};
use anomale_cli::pipeline::{Layout, Pipeline};
use anomale_core::detectors::{quantile, DetectorKind, DetectorModel, Scorer};
use anomale_core::dgi::{self, corrupt, init_params, DgiLoss, ReadoutSource, TrainConfig};
use anomale_core::encoder::{encode_edges, encode_nodes, EncoderConfig, EncoderParams};
use anomale_core::eval::{roc_auc, Confusion, InputKind};
use anomale_core::graph::FlowGraph;
use anomale_core::numeric::DenseMatrix;
use anomale_core::rng;
use anomale_core::synthetic::{blob_with_outlier, gaussian_blob, planted_two_block, satellite_clusters};
use anomale_core::Label;
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn random_graph(seed: u64, max_nodes: usize, dim: usize) -> FlowGraph {
    let mut r = rng::stream(seed, 1000);
    let nodes = r.random_range(2..=max_nodes);
    let flows = r.random_range(1..=3 * nodes);
    let src: Vec<String> = (0..flows).map(|_| r.random_range(0..nodes).to_string()).collect();
    let dst: Vec<String> = (0..flows).map(|_| r.random_range(0..nodes).to_string()).collect();
    let rows: Vec<Vec<f64>> = (0..flows)
        .map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    FlowGraph::from_flows(&src, &dst, &DenseMatrix::from_rows(&rows).unwrap(), None).unwrap()
}

// ---- 1. dataset-scale directional check

fn count_rows(path: &Path) -> usize {
    let text = std::fs::read_to_string(path).expect("dataset readable");
    text.lines().count().saturating_sub(1)
}

fn best_macro_f1(report: &anomale_core::eval::EvalReport, input: InputKind) -> f64 {
    report
        .filter(input)
        .rows
        .iter()
        .map(|r| r.metrics.macro_f1)
        .fold(0.0, f64::max)
}

fn unsw_directional() -> Outcome {
    let Some(path) = std::env::var_os("ANOMALE_UNSW_CSV").map(PathBuf::from) else {
        return Outcome::Skip("ANOMALE_UNSW_CSV not set; NF-UNSW-NB15-v2 is not bundled".into());
    };
    let n = count_rows(&path);
    let mut wins = 0;
    let mut details = Vec::new();
    for seed in [1u64, 2, 3] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig {
            seed: Some(seed),
            out: Some(dir.path().to_path_buf()),
            mode: Mode::Benchmark,
            ..Default::default()
        };
        cfg.dataset.path = Some(path.clone());
        cfg.split.downsample_fraction = (20_000.0 / n as f64).min(1.0);
        let layout = Layout::under(dir.path(), cfg.dataset.path.clone());
        let p = Pipeline::new(cfg, layout);
        let report = (|| {
            p.preprocess()?;
            p.train()?;
            p.embed()?;
            p.detect()?;
            p.evaluate()
        })();
        match report {
            Ok(r) => {
                let raw = best_macro_f1(&r, InputKind::Raw);
                let emb = best_macro_f1(&r, InputKind::Embeddings);
                if emb > raw {
                    wins += 1;
                }
                details.push(format!("seed {seed}: emb {emb:.4} vs raw {raw:.4}"));
            }
            Err(e) => details.push(format!("seed {seed}: error {e}")),
        }
    }
    verdict(wins >= 2, format!("{wins}/3 seeds embeddings > raw; {}", details.join("; ")))
}

// ---- 2. gradient oracle

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn gradient_oracle() -> Outcome {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for restart in 0..20u64 {
        let d = 3;
        let graph = random_graph(restart, 6, d);
        let config = EncoderConfig {
            depth: 1,
            hidden_dim: 6,
            input_dim: d,
        };
        let tc = TrainConfig {
            seed: restart,
            ..TrainConfig::default()
        };
        let (enc, disc) = init_params(&config, &tc).unwrap();
        let corrupted = corrupt(&graph, restart + 100);
        let loss_at = |e: &EncoderParams, w: &dgi::DiscriminatorParams| {
            let mut o = DgiLoss::new(&graph, &corrupted, config, ReadoutSource::Edges).unwrap();
            o.forward(e, w).unwrap()
        };
        let mut obj = DgiLoss::new(&graph, &corrupted, config, ReadoutSource::Edges).unwrap();
        obj.forward(&enc, &disc).unwrap();
        let g = obj.backward().unwrap();
        for i in 0..enc.layers[0].data().len() {
            let (mut p, mut m) = (enc.clone(), enc.clone());
            p.layers[0].data_mut()[i] += h;
            m.layers[0].data_mut()[i] -= h;
            let num = (loss_at(&p, &disc) - loss_at(&m, &disc)) / (2.0 * h);
            worst = worst.max(rel_err(g.encoder[0].data()[i], num));
        }
        for i in 0..disc.w.data().len() {
            let (mut p, mut m) = (disc.clone(), disc.clone());
            p.w.data_mut()[i] += h;
            m.w.data_mut()[i] -= h;
            let num = (loss_at(&enc, &p) - loss_at(&enc, &m)) / (2.0 * h);
            worst = worst.max(rel_err(g.discriminator.data()[i], num));
        }
    }
    verdict(worst < 1e-4, format!("max relative error {worst:.2e} over 20 restarts (< 1e-4)"))
}

// ---- 3. corruption invariants

fn row_bits(m: &DenseMatrix) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = m.iter_rows().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect();
    rows.sort();
    rows
}

fn corruption_invariants() -> Outcome {
    let mut bad = 0;
    for seed in 0..100u64 {
        let g = random_graph(seed + 500, 12, 4);
        let c = corrupt(&g, seed);
        let same_adj = g.edges() == c.edges()
            && g.num_nodes() == c.num_nodes()
            && (0..g.num_nodes()).all(|v| g.in_edges(v) == c.in_edges(v));
        if !same_adj || row_bits(g.edge_features()) != row_bits(c.edge_features()) {
            bad += 1;
        }
    }
    verdict(bad == 0, format!("{} of 100 random graphs violate the invariants", bad))
}

// ---- 4. shape contract

fn shape_contract() -> Outcome {
    let mut widths = Vec::new();
    for seed in 0..5u64 {
        let g = random_graph(seed + 900, 10, 39);
        let cfg = EncoderConfig::new(39);
        let enc = EncoderParams::init(&cfg, seed).unwrap();
        let nodes = encode_nodes(&g, &enc, &cfg).unwrap();
        let edges = encode_edges(&g, &nodes).unwrap();
        let flows = dgi::embed_flows(&g, &enc, &cfg).unwrap();
        widths.push((nodes.cols(), edges.cols(), flows.cols(), edges.rows() == g.num_edges()));
    }
    let ok = widths.iter().all(|&(n, e, f, rows)| n == 128 && e == 256 && f == 256 && rows);
    verdict(ok, format!("hidden 128 -> edge embedding widths {:?}", widths.iter().map(|w| w.1).collect::<Vec<_>>()))
}

// ---- 5. planted self-supervision

fn planted_self_supervision() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for seed in [1u64, 2, 3] {
        let graph = planted_two_block(2000, 20, 8, seed).unwrap();
        let cfg = EncoderConfig::new(8);
        let tc = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let out = dgi::train(&graph, &cfg, &tc).unwrap();
        let t = &out.loss_trace;
        let tail = t[t.len() - 20..].iter().sum::<f64>() / 20.0;
        let (pos, neg) = dgi::edge_scores(&graph, &out.encoder, &out.discriminator, &cfg, tc.readout, seed + 1000).unwrap();
        let auc = roc_auc(&pos, &neg).unwrap();
        ok &= tail < t[0] && auc > 0.95;
        details.push(format!("seed {seed}: loss {:.4} -> {:.4}, AUC {auc:.4}", t[0], tail));
    }
    verdict(ok, details.join("; "))
}

// ---- 6. detector oracles

fn detector_oracles() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // (a) isolation forest ranks the planted outlier first
    let mut a = true;
    for seed in [1u64, 2, 3] {
        let (x, at) = blob_with_outlier(500, 4, seed);
        let s = Scorer::fit(DetectorKind::IForest, &x, 100, seed).unwrap().score(&x).unwrap();
        a &= s.iter().enumerate().all(|(i, &v)| i == at || v < s[at]);
    }
    notes.push(format!("(a) iforest outlier top: {a}"));
    ok &= a;

    // (b) hbos equals per-feature recomputation from raw counts
    let train = gaussian_blob(1000, &[0.0; 4], 1.0, &mut rng::stream(4, 4));
    let probe = gaussian_blob(200, &[0.0; 4], 2.0, &mut rng::stream(5, 4));
    let bins = 12;
    let hbos = Scorer::fit(DetectorKind::Hbos, &train, bins, 0).unwrap();
    let scores = hbos.score(&probe).unwrap();
    let b = probe.iter_rows().zip(&scores).all(|(row, &s)| {
        let mut total = 0.0;
        for j in 0..train.cols() {
            let col: Vec<f64> = train.iter_rows().map(|r| r[j]).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let bin = |v: f64| {
                let t = (v - lo) / (hi - lo) * bins as f64;
                if t < 0.0 { 0 } else { (t.floor() as usize).min(bins - 1) }
            };
            let mut counts = vec![0usize; bins];
            col.iter().for_each(|&v| counts[bin(v)] += 1);
            let top = *counts.iter().max().unwrap() as f64;
            total += -(counts[bin(row[j])] as f64 / top).max(1e-12).ln();
        }
        total == s
    });
    notes.push(format!("(b) hbos brute force exact: {b}"));
    ok &= b;

    // (c) pca: mean scores 0, full rank equals Mahalanobis
    let base = gaussian_blob(400, &[0.0; 3], 1.0, &mut rng::stream(6, 4));
    let rows: Vec<Vec<f64>> = base
        .iter_rows()
        .map(|r| vec![3.0 * r[0] + 1.0, r[0] + r[1], 0.5 * r[2] - r[1]])
        .collect();
    let x = DenseMatrix::from_rows(&rows).unwrap();
    let pca = Scorer::fit(DetectorKind::Pca, &x, 3, 0).unwrap();
    let mean = x.row_mean().unwrap();
    let at_mean = pca.score(&DenseMatrix::from_rows(&[mean.clone()]).unwrap()).unwrap()[0];
    let inv = inverse_covariance(&x, &mean);
    let probes = gaussian_blob(50, &[0.0; 3], 3.0, &mut rng::stream(7, 4));
    let got = pca.score(&probes).unwrap();
    let max_diff = probes
        .iter_rows()
        .zip(&got)
        .map(|(r, &s)| {
            let d: Vec<f64> = r.iter().zip(&mean).map(|(a, b)| a - b).collect();
            let m: f64 = (0..3).map(|i| (0..3).map(|j| d[i] * inv[i][j] * d[j]).sum::<f64>()).sum();
            (m - s).abs()
        })
        .fold(0.0, f64::max);
    let c = at_mean == 0.0 && max_diff < 1e-8;
    notes.push(format!("(c) pca mean score {at_mean}, |pca - mahalanobis| {max_diff:.1e}"));
    ok &= c;

    // (d) cblof satellites above the median
    let mut d = true;
    for seed in [1u64, 2, 3] {
        let (x, sats) = satellite_clusters(seed);
        let s = Scorer::fit(DetectorKind::Cblof, &x, 3, seed).unwrap().score(&x).unwrap();
        let median = quantile(&s, 0.5).unwrap();
        d &= sats.iter().all(|&i| s[i] > median);
    }
    notes.push(format!("(d) cblof satellites above median: {d}"));
    ok &= d;

    verdict(ok, notes.join("; "))
}

fn inverse_covariance(x: &DenseMatrix, mean: &[f64]) -> Vec<Vec<f64>> {
    let (n, d) = x.shape();
    let mut a = vec![vec![0.0; 2 * d]; d];
    for r in x.iter_rows() {
        for i in 0..d {
            for j in 0..d {
                a[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[d + i] = 1.0;
    }
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= piv);
        for r in 0..d {
            if r != c {
                let f = a[r][c];
                let src = a[c].clone();
                a[r].iter_mut().zip(&src).for_each(|(v, s)| *v -= f * s);
            }
        }
    }
    a.into_iter().map(|row| row[d..].to_vec()).collect()
}

// ---- 7. threshold semantics

fn threshold_semantics() -> Outcome {
    let n = 10_000;
    let x = gaussian_blob(n, &[0.0; 5], 1.0, &mut rng::stream(8, 4));
    let tol = 2.0 / (n as f64).sqrt();
    let c = 0.05;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (kind, param) in [
        (DetectorKind::Pca, 3),
        (DetectorKind::IForest, 100),
        (DetectorKind::Cblof, 5),
        (DetectorKind::Hbos, 10),
    ] {
        let m = DetectorModel::fit(kind, &x, param, c, 1).unwrap();
        let (_, flags) = m.predict(&x).unwrap();
        let frac = flags.iter().filter(|f| **f).count() as f64 / n as f64;
        worst = worst.max((frac - c).abs());
        parts.push(format!("{} {frac:.4}", kind.as_str()));
    }
    verdict(worst <= tol, format!("contamination {c}: {} (tolerance {tol:.3})", parts.join(", ")))
}

// ---- 8. metric oracle

fn metric_oracle() -> Outcome {
    let c = Confusion { tp: 8, fn_: 2, fp: 1, tn: 89 };
    let m = c.metrics();
    let example = (m.macro_f1 - 0.9128).abs() < 1e-4 && (m.accuracy - 0.97).abs() < 1e-4 && (m.detection_rate - 0.8).abs() < 1e-4;

    let mut r = rng::stream(9, 4);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = r.random_range(1..200);
        let flags: Vec<bool> = (0..n).map(|_| r.random_bool(0.3)).collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| if r.random_bool(0.2) { Label::Attack } else { Label::Benign })
            .collect();
        let got = Confusion::from_flags(&flags, &labels).unwrap().metrics();
        let count = |f: bool, l: Label| flags.iter().zip(&labels).filter(|(a, b)| **a == f && **b == l).count() as f64;
        let (tp, fp, tn, fnn) = (
            count(true, Label::Attack),
            count(true, Label::Benign),
            count(false, Label::Benign),
            count(false, Label::Attack),
        );
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let want_acc = div(tp + tn, n as f64);
        let want_dr = div(tp, tp + fnn);
        let f1_pos = div(2.0 * tp, 2.0 * tp + fp + fnn);
        let f1_neg = div(2.0 * tn, 2.0 * tn + fnn + fp);
        let want_f1 = (f1_pos + f1_neg) / 2.0;
        if got.accuracy != want_acc || got.detection_rate != want_dr || got.macro_f1 != want_f1 {
            mismatches += 1;
        }
    }
    verdict(
        example && mismatches == 0,
        format!(
            "example F1 {:.4} Acc {:.4} DR {:.4}; {mismatches}/1000 random mismatches",
            m.macro_f1, m.accuracy, m.detection_rate
        ),
    )
}

// ---- 9. end-to-end determinism

fn run_all(out: &Path) -> bool {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fixture.toml");
    Command::new(env!("CARGO_BIN_EXE_anomale"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .arg("run-all")
        .env("ANOMALE_LOG", "error")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn end_to_end_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if !run_all(a.path()) || !run_all(b.path()) {
        return Outcome::Fail("run-all failed".into());
    }
    let files = [
        "train/checkpoint.bin",
        "report/report.csv",
        "report/report.txt",
        "report/report.jsonl",
        "report/comparison.csv",
        "detect/grid.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(a.path().join(f)).ok() != std::fs::read(b.path().join(f)).ok())
        .collect();
    verdict(
        differing.is_empty(),
        format!("{} artifacts compared, differing: {differing:?}", files.len()),
    )
}

fn main() {
    let checks: [(&str, Check); 9] = [
        ("dataset-scale embeddings beat raw features", unsw_directional),
        ("gradient oracle", gradient_oracle),
        ("corruption invariants", corruption_invariants),
        ("shape contract", shape_contract),
        ("planted self-supervision", planted_self_supervision),
        ("detector oracles", detector_oracles),
        ("threshold semantics", threshold_semantics),
        ("metric oracle", metric_oracle),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {name} ({secs:.1}s): {detail}");
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}

//! Seeded synthetic data with known structure, used as test oracles and for
//! the bundled fixture dataset.

use std::io::Write;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::FlowGraph;
use crate::ingest::{DatasetSchema, Label};
use crate::numeric::DenseMatrix;
use crate::rng;

const SYNTH_STREAM: u64 = 0x5eed;

fn normal(mean: f64, std: f64) -> Normal<f64> {
    Normal::new(mean, std).expect("finite parameters")
}

/// `n` rows drawn from an isotropic Gaussian around `center`.
pub fn gaussian_blob(n: usize, center: &[f64], std: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, center.len());
    for i in 0..n {
        for (x, c) in m.row_mut(i).iter_mut().zip(center) {
            *x = normal(*c, std).sample(rng);
        }
    }
    m
}

fn stack(parts: &[DenseMatrix]) -> DenseMatrix {
    let cols = parts.first().map_or(0, DenseMatrix::cols);
    let rows: Vec<Vec<f64>> = parts.iter().flat_map(|p| p.to_rows()).collect();
    if rows.is_empty() {
        return DenseMatrix::zeros(0, cols);
    }
    DenseMatrix::from_rows(&rows).expect("parts share a width")
}

/// Two flow regimes on two disjoint host blocks.
///
/// Hosts `0..hosts_per_block` only talk among themselves and their flows
/// carry features around `+1` on the first half of the dimensions; the
/// second block's flows sit around `+1` on the other half. Features are
/// therefore predictable from the endpoints, which is what a corruption that
/// shuffles feature rows destroys.
pub fn planted_two_block(
    flows: usize,
    hosts_per_block: usize,
    dim: usize,
    seed: u64,
) -> Result<FlowGraph> {
    if hosts_per_block < 2 || dim < 2 || flows < 2 {
        return Err(Error::InvalidParameter(
            "planted graph needs ≥2 flows, ≥2 hosts per block and ≥2 dims".into(),
        ));
    }
    let mut rng = rng::stream(seed, SYNTH_STREAM);
    let noise = normal(0.0, 0.15);
    let mut src = Vec::with_capacity(flows);
    let mut dst = Vec::with_capacity(flows);
    let mut rows = Vec::with_capacity(flows);
    for i in 0..flows {
        let block = i % 2;
        let a = rng.random_range(0..hosts_per_block);
        let mut b = rng.random_range(0..hosts_per_block - 1);
        if b >= a {
            b += 1;
        }
        src.push(format!("10.{block}.0.{a}"));
        dst.push(format!("10.{block}.0.{b}"));
        let row: Vec<f64> = (0..dim)
            .map(|k| {
                let hot = (k < dim / 2) == (block == 0);
                f64::from(u8::from(hot)) + noise.sample(&mut rng)
            })
            .collect();
        rows.push(row);
    }
    FlowGraph::from_flows(&src, &dst, &DenseMatrix::from_rows(&rows)?, None)
}

/// A tight cluster of `n` points in `dim` dimensions plus one point far away.
/// Returns the data and the outlier's row index.
pub fn blob_with_outlier(n: usize, dim: usize, seed: u64) -> (DenseMatrix, usize) {
    let mut rng = rng::stream(seed, SYNTH_STREAM);
    let blob = gaussian_blob(n, &vec![0.0; dim], 1.0, &mut rng);
    let outlier = DenseMatrix::from_vec(1, dim, vec![12.0; dim]).expect("1×dim");
    let at = rng.random_range(0..=n);
    let mut rows = blob.to_rows();
    rows.insert(at, outlier.row(0).to_vec());
    (DenseMatrix::from_rows(&rows).expect("uniform width"), at)
}

/// Two 50-point clusters and a 3-point satellite between them, 103 rows in
/// 2-D. Returns the data and the satellite row indices.
pub fn satellite_clusters(seed: u64) -> (DenseMatrix, Vec<usize>) {
    let mut rng = rng::stream(seed, SYNTH_STREAM);
    let a = gaussian_blob(50, &[0.0, 0.0], 0.5, &mut rng);
    let b = gaussian_blob(50, &[10.0, 0.0], 0.5, &mut rng);
    let s = gaussian_blob(3, &[5.0, 8.0], 0.2, &mut rng);
    (stack(&[a, b, s]), vec![100, 101, 102])
}

/// `n` rows of which `round(rate·n)` are shifted far from the benign bulk,
/// interleaved at random positions.
pub fn labelled_anomalies(n: usize, dim: usize, rate: f64, seed: u64) -> (DenseMatrix, Vec<Label>) {
    let mut rng = rng::stream(seed, SYNTH_STREAM);
    let n_anom = (rate * n as f64).round() as usize;
    let mut is_anom = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, n_anom) {
        is_anom[i] = true;
    }
    let benign = normal(0.0, 1.0);
    let shifted = normal(6.0, 1.0);
    let mut m = DenseMatrix::zeros(n, dim);
    for (i, &anom) in is_anom.iter().enumerate() {
        for x in m.row_mut(i) {
            *x = if anom { shifted.sample(&mut rng) } else { benign.sample(&mut rng) };
        }
    }
    let labels = is_anom
        .into_iter()
        .map(|a| if a { Label::Attack } else { Label::Benign })
        .collect();
    (m, labels)
}

/// Writes a labelled NetFlow CSV in `schema`'s layout.
///
/// Benign flows run between a pool of clients and servers with
/// web-like sizes; attack flows come from a few scanners, hit one victim on
/// many ports, and are short with tiny payloads.
pub fn write_flow_csv<W: Write>(
    writer: W,
    schema: &DatasetSchema,
    flows: usize,
    attack_rate: f64,
    seed: u64,
) -> Result<()> {
    if !(0.0..=1.0).contains(&attack_rate) {
        return Err(Error::InvalidParameter(format!("attack rate {attack_rate} outside [0, 1]")));
    }
    let mut rng = rng::stream(seed, SYNTH_STREAM);
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec![schema.src_ip, schema.src_port, schema.dst_ip, schema.dst_port];
    header.extend_from_slice(schema.features);
    header.push(schema.label);
    header.push(schema.attack_type);
    out.write_record(&header)?;

    let clients: Vec<String> = (1..=12).map(|i| format!("59.166.0.{i}")).collect();
    let servers: Vec<String> = (1..=4).map(|i| format!("149.171.126.{i}")).collect();
    let scanners: Vec<String> = (1..=3).map(|i| format!("175.45.176.{i}")).collect();
    let victim = "149.171.126.9".to_string();
    let n_attack = (attack_rate * flows as f64).round() as usize;
    let mut attack = vec![false; flows];
    for i in rand::seq::index::sample(&mut rng, flows, n_attack) {
        attack[i] = true;
    }

    for &is_attack in &attack {
        let (src, dst, sport, dport, proto, l7, flags, bytes, pkts, dur) = if is_attack {
            (
                scanners.choose(&mut rng).expect("nonempty"),
                &victim,
                rng.random_range(1024..65535u32),
                rng.random_range(1..1024u32),
                6,
                0.0,
                2,
                rng.random_range(40.0..120.0),
                rng.random_range(1.0..3.0f64).floor(),
                rng.random_range(0.0..5.0f64).floor(),
            )
        } else {
            let proto = if rng.random_bool(0.8) { 6 } else { 17 };
            (
                clients.choose(&mut rng).expect("nonempty"),
                servers.choose(&mut rng).expect("nonempty"),
                rng.random_range(1024..65535u32),
                *[80u32, 443, 53, 22].choose(&mut rng).expect("nonempty"),
                proto,
                *[7.0, 91.0, 5.0, 92.0].choose(&mut rng).expect("nonempty"),
                if proto == 6 { 27 } else { 0 },
                rng.random_range(500.0..60000.0f64).round(),
                rng.random_range(4.0..80.0f64).floor(),
                rng.random_range(10.0..4000.0f64).floor(),
            )
        };
        let mut rec = vec![src.clone(), sport.to_string(), dst.clone(), dport.to_string()];
        for &name in schema.features {
            let v = match name {
                "PROTOCOL" => proto.to_string(),
                "L7_PROTO" => l7.to_string(),
                "TCP_FLAGS" => flags.to_string(),
                "IN_BYTES" => bytes.to_string(),
                "IN_PKTS" => pkts.to_string(),
                "OUT_BYTES" => (bytes * if is_attack { 0.0 } else { rng.random_range(0.5..3.0) })
                    .round()
                    .to_string(),
                "OUT_PKTS" => (pkts * if is_attack { 0.0 } else { 1.0 }).to_string(),
                "FLOW_DURATION_MILLISECONDS" => dur.to_string(),
                "MIN_TTL" | "MAX_TTL" => if is_attack { "254" } else { "31" }.to_string(),
                "TCP_WIN_MAX_IN" => if is_attack { "1024" } else { "65535" }.to_string(),
                "LONGEST_FLOW_PKT" => (bytes / pkts.max(1.0)).round().to_string(),
                _ => rng.random_range(0..4u32).to_string(),
            };
            rec.push(v);
        }
        rec.push(if is_attack { "1" } else { "0" }.to_string());
        rec.push(if is_attack { "Reconnaissance" } else { "Benign" }.to_string());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<csv writer>", e))
}

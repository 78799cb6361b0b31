//! Cluster-based local outlier factor on top of seeded k-means.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::squared_distance;
use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

const MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CblofOptions {
    /// Fraction of points the large clusters must cover.
    pub alpha: f64,
    /// Size ratio between consecutive clusters that marks the boundary.
    pub beta: f64,
    /// Multiply scores by the size of the point's cluster.
    pub weighted: bool,
}

impl Default for CblofOptions {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 5.0,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cblof {
    /// Sorted by training size, largest first.
    centroids: DenseMatrix,
    sizes: Vec<usize>,
    n_large: usize,
    options: CblofOptions,
}

fn nearest(row: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cent) in centroids.iter_rows().enumerate() {
        let d = squared_distance(row, cent);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp(x: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = x.rows();
    let mut centroids = DenseMatrix::zeros(k, x.cols());
    centroids.row_mut(0).copy_from_slice(x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = x.iter_rows().map(|r| squared_distance(r, centroids.row(0))).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point already coincides with a centroid
            Err(_) => rng.random_range(0..n),
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (d, r) in d2.iter_mut().zip(x.iter_rows()) {
            *d = d.min(squared_distance(r, centroids.row(c)));
        }
    }
    centroids
}

/// Lloyd iterations from a k-means++ start. Returns centroids and labels.
fn kmeans(x: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> Result<(DenseMatrix, Vec<usize>)> {
    let n = x.rows();
    let mut centroids = kmeans_pp(x, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut reseeded = vec![false; k];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for (i, r) in x.iter_rows().enumerate() {
            let (c, d) = nearest(r, &centroids);
            dist[i] = d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        let mut sums = DenseMatrix::zeros(k, x.cols());
        let mut counts = vec![0usize; k];
        for (i, r) in x.iter_rows().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(r) {
                *s += v;
            }
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            if reseeded[empty] {
                return Err(Error::EmptyCluster(empty));
            }
            reseeded[empty] = true;
            // move the empty centroid onto the point farthest from its own
            let far = (0..n)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("n ≥ k ≥ 2");
            log::debug!("k-means: re-seeding empty cluster {empty} at row {far}");
            centroids.row_mut(empty).copy_from_slice(x.row(far));
            labels.iter_mut().for_each(|l| *l = usize::MAX);
            continue;
        }
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            for (m, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                *m = s * inv;
            }
        }
        if !changed {
            break;
        }
    }
    Ok((centroids, labels))
}

/// Number of large clusters given sizes sorted in descending order.
fn large_count(sizes: &[usize], alpha: f64, beta: f64) -> usize {
    let n: usize = sizes.iter().sum();
    let mut cum = 0;
    for i in 1..sizes.len() {
        cum += sizes[i - 1];
        if cum as f64 >= alpha * n as f64 || sizes[i - 1] as f64 / sizes[i] as f64 >= beta {
            return i;
        }
    }
    sizes.len()
}

impl Cblof {
    pub fn fit(x: &DenseMatrix, n_clusters: usize, options: CblofOptions, rng: &mut ChaCha8Rng) -> Result<Self> {
        let n = x.rows();
        if n_clusters < 2 || n_clusters > n {
            return Err(Error::InvalidParameter(format!(
                "n_clusters {n_clusters} must be in 2..={n}"
            )));
        }
        let (centroids, labels) = kmeans(x, n_clusters, rng)?;
        let mut sizes = vec![0usize; n_clusters];
        for &l in &labels {
            sizes[l] += 1;
        }
        let mut order: Vec<usize> = (0..n_clusters).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let sizes: Vec<usize> = order.iter().map(|&c| sizes[c]).collect();
        let centroids = centroids.select_rows(&order);
        let n_large = large_count(&sizes, options.alpha, options.beta);
        Ok(Self {
            centroids,
            sizes,
            n_large,
            options,
        })
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }

    pub fn centroids(&self) -> &DenseMatrix {
        &self.centroids
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_large(&self) -> usize {
        self.n_large
    }

    /// Distance to the own centroid for members of a large cluster, to the
    /// nearest large centroid otherwise.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let (c, d2) = nearest(row, &self.centroids);
        let dist = if c < self.n_large {
            d2.sqrt()
        } else {
            (0..self.n_large)
                .map(|l| squared_distance(row, self.centroids.row(l)))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        };
        if self.options.weighted {
            dist * self.sizes[c] as f64
        } else {
            dist
        }
    }
}

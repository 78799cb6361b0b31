//! Isolation forest.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

const EULER_GAMMA: f64 = 0.5772156649;
const MAX_SAMPLES: usize = 256;

/// Expected path length of an unsuccessful BST search among `n` points:
/// `2 H(n-1) - 2(n-1)/n` with `H(i) ≈ ln i + γ`, and `c(2) = 1`.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { size: usize },
    Split { feature: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn grow(x: &DenseMatrix, rows: Vec<usize>, height_limit: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut tree = Tree { nodes: Vec::new() };
        tree.build(x, rows, 0, height_limit, rng);
        tree
    }

    fn build(
        &mut self,
        x: &DenseMatrix,
        rows: Vec<usize>,
        depth: usize,
        limit: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= limit || rows.len() <= 1 {
            return id;
        }
        // features with spread inside this node
        let ranges: Vec<(usize, f64, f64)> = (0..x.cols())
            .filter_map(|j| {
                let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = x.get(i, j);
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((j, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let mut value = rng.random_range(lo..hi);
        if value <= lo {
            value = (lo + hi) / 2.0;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| x.get(i, feature) < value);
        let left = self.build(x, l, depth + 1, limit, rng);
        let right = self.build(x, r, depth + 1, limit, rng);
        self.nodes[id] = Node::Split { feature, value, left, right };
        id
    }

    fn path_length(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[id] {
                Node::Leaf { size } => return depth + average_path_length(size),
                Node::Split { feature, value, left, right } => {
                    id = if row[feature] < value { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    dim: usize,
    sample_size: usize,
    trees: Vec<Tree>,
}

impl IsolationForest {
    /// `n_estimators` trees on subsamples of `min(256, N)` rows drawn
    /// without replacement, each grown to height `ceil(log2 ψ)`.
    pub fn fit(x: &DenseMatrix, n_estimators: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let n = x.rows();
        if n < 2 {
            return Err(Error::Insufficient {
                what: "training rows for iforest",
                needed: 2,
                available: n,
            });
        }
        if n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be at least 1".into()));
        }
        let psi = n.min(MAX_SAMPLES);
        let limit = (psi as f64).log2().ceil() as usize;
        let trees = (0..n_estimators)
            .map(|_| {
                let rows = sample(rng, n, psi).into_vec();
                Tree::grow(x, rows, limit, rng)
            })
            .collect();
        Ok(Self {
            dim: x.cols(),
            sample_size: psi,
            trees,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_estimators(&self) -> usize {
        self.trees.len()
    }

    pub fn mean_path_length(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// `2^(-E[h(x)] / c(ψ))`.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        (-self.mean_path_length(row) / average_path_length(self.sample_size)).exp2()
    }
}

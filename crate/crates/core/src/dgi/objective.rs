//! Loss and hand-derived gradient of the edge-level infomax objective.
//!
//! With `n` directed edges, true edge embeddings `z_e`, corrupted ones `z̃_e`,
//! summary `s = σ(mean(z))` and bilinear weight `W`, the logits are
//! `l_e = z_eᵀ W s` and `l̃_e = z̃_eᵀ W s`, and
//!
//! ```text
//! L = 1/(2n) Σ_e [ softplus(-l_e) + softplus(l̃_e) ]
//! ```
//!
//! which equals the binary cross-entropy of `σ(l_e)` against 1 and `σ(l̃_e)`
//! against 0, evaluated without clamping.

use super::{DiscriminatorParams, ReadoutSource};
use crate::encoder::{self, EncoderConfig, EncoderParams, Forward};
use crate::error::{Error, Result};
use crate::graph::FlowGraph;
use crate::numeric::{sigmoid, softplus, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub encoder: Vec<DenseMatrix>,
    pub discriminator: DenseMatrix,
}

struct Tape {
    encoder: EncoderParams,
    w: DenseMatrix,
    pos: Forward,
    neg: Forward,
    pos_edges: DenseMatrix,
    neg_edges: DenseMatrix,
    summary: Vec<f64>,
    w_s: Vec<f64>,
    pos_logits: Vec<f64>,
    neg_logits: Vec<f64>,
}

/// The fixed compute graph for one (true graph, corrupted graph) pair.
pub struct DgiLoss<'g> {
    graph: &'g FlowGraph,
    corrupted: &'g FlowGraph,
    config: EncoderConfig,
    readout: ReadoutSource,
    tape: Option<Tape>,
}

impl<'g> DgiLoss<'g> {
    pub fn new(
        graph: &'g FlowGraph,
        corrupted: &'g FlowGraph,
        config: EncoderConfig,
        readout: ReadoutSource,
    ) -> Result<Self> {
        if graph.edges() != corrupted.edges() || graph.num_nodes() != corrupted.num_nodes() {
            return Err(Error::shape(
                "dgi_loss",
                "corrupted graph must keep the adjacency of the true graph",
            ));
        }
        if graph.num_edges() == 0 {
            return Err(Error::EmptyInput("graph without edges"));
        }
        Ok(Self {
            graph,
            corrupted,
            config,
            readout,
            tape: None,
        })
    }

    /// Runs the forward pass and records what `backward` needs.
    pub fn forward(&mut self, encoder: &EncoderParams, disc: &DiscriminatorParams) -> Result<f64> {
        let pos = encoder::forward(self.graph, encoder, &self.config)?;
        let neg = encoder::forward(self.corrupted, encoder, &self.config)?;
        let pos_edges = encoder::encode_edges(self.graph, &pos.nodes)?;
        let neg_edges = encoder::encode_edges(self.corrupted, &neg.nodes)?;
        let summary = match self.readout {
            ReadoutSource::Edges => super::readout(&pos_edges)?,
            ReadoutSource::Nodes => super::readout(&pos.nodes)?,
        };
        disc.check(pos_edges.cols(), summary.len())?;
        let w_s = disc.w.mul_vec(&summary)?;
        let pos_logits = pos_edges.mul_vec(&w_s)?;
        let neg_logits = neg_edges.mul_vec(&w_s)?;

        let n = pos_logits.len() as f64;
        let total: f64 = pos_logits.iter().map(|&l| softplus(-l)).sum::<f64>()
            + neg_logits.iter().map(|&l| softplus(l)).sum::<f64>();
        let loss = total / (2.0 * n);

        self.tape = Some(Tape {
            encoder: encoder.clone(),
            w: disc.w.clone(),
            pos,
            neg,
            pos_edges,
            neg_edges,
            summary,
            w_s,
            pos_logits,
            neg_logits,
        });
        Ok(loss)
    }

    /// Discriminator probabilities `(true edges, corrupted edges)` from the
    /// last forward pass.
    pub fn scores(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.tape.as_ref().map(|t| {
            (
                t.pos_logits.iter().map(|&l| sigmoid(l)).collect(),
                t.neg_logits.iter().map(|&l| sigmoid(l)).collect(),
            )
        })
    }

    pub fn backward(&self) -> Result<Gradients> {
        let t = self.tape.as_ref().ok_or(Error::NoForwardPass)?;
        let n = t.pos_logits.len() as f64;
        let emb = t.pos_edges.cols();
        let hidden = self.config.hidden_dim;

        // ∂L/∂logit
        let g_pos: Vec<f64> = t.pos_logits.iter().map(|&l| (sigmoid(l) - 1.0) / (2.0 * n)).collect();
        let g_neg: Vec<f64> = t.neg_logits.iter().map(|&l| sigmoid(l) / (2.0 * n)).collect();

        // q = Σ g_e z_e over true and corrupted edges; ∂L/∂W = q sᵀ
        let mut q = vec![0.0; emb];
        for (row, g) in t.pos_edges.iter_rows().zip(&g_pos).chain(t.neg_edges.iter_rows().zip(&g_neg)) {
            for (qi, zi) in q.iter_mut().zip(row) {
                *qi += g * zi;
            }
        }
        let mut d_w = DenseMatrix::zeros(emb, t.summary.len());
        for (i, qi) in q.iter().enumerate() {
            for (d, s) in d_w.row_mut(i).iter_mut().zip(&t.summary) {
                *d = qi * s;
            }
        }

        // through the readout: s = σ(m), m = mean of rows
        let d_s = t.w.transpose().mul_vec(&q)?;
        let d_mean: Vec<f64> = d_s
            .iter()
            .zip(&t.summary)
            .map(|(d, s)| d * s * (1.0 - s))
            .collect();

        let mut d_pos_edges = DenseMatrix::zeros(t.pos_edges.rows(), emb);
        for (e, g) in g_pos.iter().enumerate() {
            for (d, ws) in d_pos_edges.row_mut(e).iter_mut().zip(&t.w_s) {
                *d = g * ws;
            }
        }
        if self.readout == ReadoutSource::Edges {
            let inv = 1.0 / t.pos_edges.rows() as f64;
            for e in 0..d_pos_edges.rows() {
                for (d, m) in d_pos_edges.row_mut(e).iter_mut().zip(&d_mean) {
                    *d += m * inv;
                }
            }
        }
        let mut d_neg_edges = DenseMatrix::zeros(t.neg_edges.rows(), emb);
        for (e, g) in g_neg.iter().enumerate() {
            for (d, ws) in d_neg_edges.row_mut(e).iter_mut().zip(&t.w_s) {
                *d = g * ws;
            }
        }

        let mut d_pos_nodes = encoder::edge_embedding_backward(self.graph, &d_pos_edges, hidden);
        if self.readout == ReadoutSource::Nodes {
            let inv = 1.0 / d_pos_nodes.rows() as f64;
            for v in 0..d_pos_nodes.rows() {
                for (d, m) in d_pos_nodes.row_mut(v).iter_mut().zip(&d_mean) {
                    *d += m * inv;
                }
            }
        }
        let d_neg_nodes = encoder::edge_embedding_backward(self.corrupted, &d_neg_edges, hidden);

        let mut grads = encoder::backward(self.graph, &t.pos, &t.encoder, &d_pos_nodes)?;
        let neg_grads = encoder::backward(self.corrupted, &t.neg, &t.encoder, &d_neg_nodes)?;
        for (g, ng) in grads.iter_mut().zip(&neg_grads) {
            g.add_assign(ng)?;
        }
        Ok(Gradients {
            encoder: grads,
            discriminator: d_w,
        })
    }
}

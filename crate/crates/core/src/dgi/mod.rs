//! Self-supervised training of the encoder with an edge-level Deep Graph
//! Infomax objective.
//!
//! Each epoch draws a fresh corruption (a uniform permutation of the
//! edge-feature rows, adjacency untouched), encodes both graphs, scores every
//! true and corrupted edge embedding against the sigmoid-of-mean summary of
//! the true graph with a bilinear discriminator, and takes one Adam step on
//! the binary cross-entropy.

mod checkpoint;
mod objective;

pub use checkpoint::Checkpoint;
pub use objective::{DgiLoss, Gradients};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoder::{self, EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::graph::FlowGraph;
use crate::numeric::{glorot_uniform, sigmoid, AdamConfig, AdamState, DenseMatrix};
use crate::rng;

/// Probability floor used by [`bce_loss`].
pub const SCORE_EPSILON: f64 = 1e-12;

/// Which embeddings the global summary averages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutSource {
    /// Mean of the edge embeddings; the discriminator weight is square.
    #[default]
    Edges,
    /// Mean of the node embeddings.
    Nodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub readout: ReadoutSource,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 200,
            lr: adam.lr,
            seed: 0,
            readout: ReadoutSource::Edges,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn summary_dim(&self, encoder: &EncoderConfig) -> usize {
        match self.readout {
            ReadoutSource::Edges => encoder.edge_embedding_dim(),
            ReadoutSource::Nodes => encoder.hidden_dim,
        }
    }
}

/// Bilinear discriminator weight, `edge embedding dim × summary dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorParams {
    pub w: DenseMatrix,
}

impl DiscriminatorParams {
    pub fn zeros(embedding_dim: usize, summary_dim: usize) -> Self {
        Self {
            w: DenseMatrix::zeros(embedding_dim, summary_dim),
        }
    }

    pub(crate) fn check(&self, embedding_dim: usize, summary_dim: usize) -> Result<()> {
        if self.w.shape() != (embedding_dim, summary_dim) {
            return Err(Error::shape(
                "discriminator",
                format!(
                    "weight is {:?}, embeddings need ({embedding_dim}, {summary_dim})",
                    self.w.shape()
                ),
            ));
        }
        Ok(())
    }
}

/// Uniform permutation of `0..num_edges`, fixed by `seed`. Same as the
/// first epoch's corruption in a run seeded by `seed`.
pub fn corruption_permutation(num_edges: usize, seed: u64) -> Vec<usize> {
    epoch_permutation(num_edges, seed, 0)
}

/// Graph whose edge `i` carries the feature row of edge `permutation[i]`.
pub fn corrupt_with(graph: &FlowGraph, permutation: &[usize]) -> Result<FlowGraph> {
    if permutation.len() != graph.num_edges() {
        return Err(Error::shape(
            "corrupt",
            format!("permutation of {} for {} edges", permutation.len(), graph.num_edges()),
        ));
    }
    graph.with_edge_features(graph.edge_features().select_rows(permutation))
}

/// Shuffles edge-feature rows among edges; adjacency is unchanged.
pub fn corrupt(graph: &FlowGraph, seed: u64) -> FlowGraph {
    let perm = corruption_permutation(graph.num_edges(), seed);
    corrupt_with(graph, &perm).expect("permutation sized to the graph")
}

/// `σ(mean of rows)`.
pub fn readout(embeddings: &DenseMatrix) -> Result<Vec<f64>> {
    if embeddings.rows() == 0 {
        return Err(Error::EmptyInput("readout over zero embeddings"));
    }
    Ok(embeddings.row_mean()?.into_iter().map(sigmoid).collect())
}

/// `σ(zᵀ W s)`.
pub fn discriminate(z: &[f64], summary: &[f64], w: &DenseMatrix) -> Result<f64> {
    if w.shape() != (z.len(), summary.len()) {
        return Err(Error::shape(
            "discriminate",
            format!("z[{}], W{:?}, s[{}]", z.len(), w.shape(), summary.len()),
        ));
    }
    let w_s = w.mul_vec(summary)?;
    Ok(sigmoid(z.iter().zip(&w_s).map(|(a, b)| a * b).sum()))
}

/// Binary cross-entropy `-(1/2n) Σ [ln D(pos) + ln(1 - D(neg))]`. Scores are
/// clamped to `[ε, 1 - ε]` before taking logs.
pub fn bce_loss(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.len() != neg.len() {
        return Err(Error::shape(
            "bce_loss",
            format!("{} positive vs {} negative scores", pos.len(), neg.len()),
        ));
    }
    if pos.is_empty() {
        return Err(Error::EmptyInput("bce_loss without scores"));
    }
    let clamp = |p: f64| {
        let c = p.clamp(SCORE_EPSILON, 1.0 - SCORE_EPSILON);
        if c != p {
            log::debug!("clamped discriminator score {p}");
        }
        c
    };
    let total: f64 = pos.iter().map(|&p| clamp(p).ln()).sum::<f64>()
        + neg.iter().map(|&p| (1.0 - clamp(p)).ln()).sum::<f64>();
    Ok(-total / (2.0 * pos.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub encoder: EncoderParams,
    pub discriminator: DiscriminatorParams,
    /// Loss before each epoch's update.
    pub loss_trace: Vec<f64>,
    pub optimizer_steps: u64,
}

/// Seeded initial parameters: Glorot-uniform encoder layers, then the
/// discriminator from the same stream.
pub fn init_params(
    encoder_config: &EncoderConfig,
    train_config: &TrainConfig,
) -> Result<(EncoderParams, DiscriminatorParams)> {
    encoder_config.validate()?;
    let mut rng = rng::stream(train_config.seed, rng::ENCODER_INIT);
    let enc = EncoderParams::init_with(encoder_config, &mut rng);
    let disc = DiscriminatorParams {
        w: glorot_uniform(
            encoder_config.edge_embedding_dim(),
            train_config.summary_dim(encoder_config),
            &mut rng,
        ),
    };
    Ok((enc, disc))
}

pub fn train(
    graph: &FlowGraph,
    encoder_config: &EncoderConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(graph, encoder_config, train_config, |_, _| {})
}

/// [`train`] with a callback receiving `(epoch, loss)` after every epoch.
pub fn train_with(
    graph: &FlowGraph,
    encoder_config: &EncoderConfig,
    train_config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    train_config.validate()?;
    let (mut enc, mut disc) = init_params(encoder_config, train_config)?;
    let shapes: Vec<(usize, usize)> = enc
        .layers
        .iter()
        .chain(std::iter::once(&disc.w))
        .map(DenseMatrix::shape)
        .collect();
    let mut adam = AdamState::new(train_config.adam(), &shapes);
    let names: Vec<String> = (0..enc.layers.len())
        .map(|k| format!("encoder.layer{k}"))
        .chain(std::iter::once("discriminator.w".to_string()))
        .collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();

    let mut loss_trace = Vec::with_capacity(train_config.epochs);
    for epoch in 0..train_config.epochs {
        let corrupted = corrupt_with(
            graph,
            &epoch_permutation(graph.num_edges(), train_config.seed, epoch),
        )?;
        let mut objective = DgiLoss::new(graph, &corrupted, *encoder_config, train_config.readout)?;
        let loss = objective.forward(&enc, &disc)?;
        if !loss.is_finite() {
            let (pos, neg) = objective.scores().unwrap_or_default();
            return Err(Error::NonFiniteLoss {
                epoch,
                detail: format!(
                    "{} true / {} corrupted scores, first true score {:?}",
                    pos.len(),
                    neg.len(),
                    pos.first()
                ),
            });
        }
        let grads = objective.backward()?;
        let mut params: Vec<&mut DenseMatrix> = enc.layers.iter_mut().collect();
        params.push(&mut disc.w);
        let grad_refs: Vec<&DenseMatrix> = grads
            .encoder
            .iter()
            .chain(std::iter::once(&grads.discriminator))
            .collect();
        adam.step(&mut params, &grad_refs, &name_refs)?;
        loss_trace.push(loss);
        log::debug!("epoch {epoch}: loss {loss:.6}");
        on_epoch(epoch, loss);
    }

    Ok(TrainOutcome {
        encoder: enc,
        discriminator: disc,
        loss_trace,
        optimizer_steps: adam.steps(),
    })
}

/// Permutation used for the corruption of `epoch` in a run seeded by `seed`.
pub fn epoch_permutation(num_edges: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..num_edges).collect();
    perm.shuffle(&mut rng::stream(seed, rng::CORRUPTION_BASE + epoch as u64));
    perm
}

/// Discriminator probabilities for every true edge and every edge of the
/// corruption drawn with `corruption_seed`.
pub fn edge_scores(
    graph: &FlowGraph,
    encoder: &EncoderParams,
    discriminator: &DiscriminatorParams,
    encoder_config: &EncoderConfig,
    readout: ReadoutSource,
    corruption_seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let corrupted = corrupt(graph, corruption_seed);
    let mut objective = DgiLoss::new(graph, &corrupted, *encoder_config, readout)?;
    objective.forward(encoder, discriminator)?;
    Ok(objective.scores().expect("forward pass recorded"))
}

/// Edge embeddings for `graph`: one `2·hidden` row per directed edge.
pub fn embed_edges(
    graph: &FlowGraph,
    encoder: &EncoderParams,
    encoder_config: &EncoderConfig,
) -> Result<DenseMatrix> {
    let nodes = encoder::encode_nodes(graph, encoder, encoder_config)?;
    encoder::encode_edges(graph, &nodes)
}

/// One embedding per flow: the row of each flow's source-to-destination edge.
pub fn embed_flows(
    graph: &FlowGraph,
    encoder: &EncoderParams,
    encoder_config: &EncoderConfig,
) -> Result<DenseMatrix> {
    Ok(embed_edges(graph, encoder, encoder_config)?.select_rows(&graph.forward_edges()))
}

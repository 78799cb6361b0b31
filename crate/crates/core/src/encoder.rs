//! E-GraphSAGE forward pass.
//!
//! Layer `k` aggregates, for every node `v`, the mean of `h_u ‖ e_uv` over
//! the incoming edges `uv`, concatenates it after `h_v`, multiplies by `W_k`
//! and applies ReLU. Node features start as all-ones vectors as wide as the
//! edge features, so the first weight matrix is `(3·d_e) × hidden`; deeper
//! layers are `(2·hidden + d_e) × hidden`. An edge embedding is `z_u ‖ z_v`.
//!
//! Nodes without incoming edges aggregate to the zero vector. Sums run in
//! ascending edge order so results are bitwise reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FlowGraph;
use crate::numeric::{glorot_uniform, DenseMatrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Number of message-passing layers.
    pub depth: usize,
    pub hidden_dim: usize,
    /// Edge feature width `d_e`.
    pub input_dim: usize,
}

impl EncoderConfig {
    /// One layer of 128 hidden units.
    pub fn new(input_dim: usize) -> Self {
        Self {
            depth: 1,
            hidden_dim: 128,
            input_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidConfig("encoder depth must be at least 1".into()));
        }
        if self.hidden_dim == 0 || self.input_dim == 0 {
            return Err(Error::InvalidConfig(
                "encoder hidden and input widths must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `(rows, cols)` of each layer's weight matrix.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.depth)
            .map(|k| {
                let prev = if k == 0 { self.input_dim } else { self.hidden_dim };
                (2 * prev + self.input_dim, self.hidden_dim)
            })
            .collect()
    }

    pub fn edge_embedding_dim(&self) -> usize {
        2 * self.hidden_dim
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub layers: Vec<DenseMatrix>,
}

impl EncoderParams {
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, rng::ENCODER_INIT);
        Ok(Self::init_with(config, &mut rng))
    }

    pub fn init_with<R: Rng>(config: &EncoderConfig, rng: &mut R) -> Self {
        Self {
            layers: config
                .layer_shapes()
                .into_iter()
                .map(|(r, c)| glorot_uniform(r, c, rng))
                .collect(),
        }
    }

    pub fn zeros(config: &EncoderConfig) -> Self {
        Self {
            layers: config
                .layer_shapes()
                .into_iter()
                .map(|(r, c)| DenseMatrix::zeros(r, c))
                .collect(),
        }
    }

    pub fn check(&self, config: &EncoderConfig) -> Result<()> {
        let want = config.layer_shapes();
        let got: Vec<_> = self.layers.iter().map(DenseMatrix::shape).collect();
        if want != got {
            return Err(Error::shape(
                "encoder_params",
                format!("layers {got:?}, config expects {want:?}"),
            ));
        }
        Ok(())
    }
}

/// Mean of `h_u ‖ e_uv` over the edges entering `v`.
pub fn aggregate_neighborhood(graph: &FlowGraph, v: usize, h_prev: &DenseMatrix) -> Vec<f64> {
    let p = h_prev.cols();
    let mut acc = vec![0.0; p + graph.feature_dim()];
    accumulate(graph, v, h_prev, &mut acc);
    acc
}

fn accumulate(graph: &FlowGraph, v: usize, h_prev: &DenseMatrix, out: &mut [f64]) {
    let p = h_prev.cols();
    let incoming = graph.in_edges(v);
    if incoming.is_empty() {
        out.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let (node_part, edge_part) = out.split_at_mut(p);
    for &e in incoming {
        let u = graph.edges()[e].src;
        for (a, x) in node_part.iter_mut().zip(h_prev.row(u)) {
            *a += x;
        }
        for (a, x) in edge_part.iter_mut().zip(graph.edge_features().row(e)) {
            *a += x;
        }
    }
    let n = incoming.len() as f64;
    out.iter_mut().for_each(|x| *x /= n);
}

/// Layer input `h_v ‖ mean(h_u ‖ e_uv)` for every node.
fn layer_input(graph: &FlowGraph, h_prev: &DenseMatrix) -> DenseMatrix {
    let p = h_prev.cols();
    let width = 2 * p + graph.feature_dim();
    let mut input = DenseMatrix::zeros(graph.num_nodes(), width);
    for v in 0..graph.num_nodes() {
        let row = input.row_mut(v);
        row[..p].copy_from_slice(h_prev.row(v));
        accumulate(graph, v, h_prev, &mut row[p..]);
    }
    input
}

pub(crate) struct LayerCache {
    input: DenseMatrix,
    pre: DenseMatrix,
}

pub(crate) struct Forward {
    caches: Vec<LayerCache>,
    pub nodes: DenseMatrix,
}

pub(crate) fn forward(
    graph: &FlowGraph,
    params: &EncoderParams,
    config: &EncoderConfig,
) -> Result<Forward> {
    config.validate()?;
    params.check(config)?;
    if graph.feature_dim() != config.input_dim {
        return Err(Error::shape(
            "encode_nodes",
            format!(
                "graph edge features are {} wide, encoder expects {}",
                graph.feature_dim(),
                config.input_dim
            ),
        ));
    }
    let mut h = graph.node_features();
    let mut caches = Vec::with_capacity(params.layers.len());
    for w in &params.layers {
        let input = layer_input(graph, &h);
        let pre = input.matmul(w)?;
        h = pre.relu();
        caches.push(LayerCache { input, pre });
    }
    Ok(Forward { caches, nodes: h })
}

/// Final-layer node embeddings `z_v`, one row per node.
pub fn encode_nodes(
    graph: &FlowGraph,
    params: &EncoderParams,
    config: &EncoderConfig,
) -> Result<DenseMatrix> {
    Ok(forward(graph, params, config)?.nodes)
}

/// Edge embeddings `z_u ‖ z_v`, one row per directed edge in edge order.
pub fn encode_edges(graph: &FlowGraph, nodes: &DenseMatrix) -> Result<DenseMatrix> {
    if nodes.rows() != graph.num_nodes() {
        return Err(Error::shape(
            "encode_edges",
            format!("{} node rows for {} nodes", nodes.rows(), graph.num_nodes()),
        ));
    }
    let h = nodes.cols();
    let mut out = DenseMatrix::zeros(graph.num_edges(), 2 * h);
    for (e, edge) in graph.edges().iter().enumerate() {
        let row = out.row_mut(e);
        row[..h].copy_from_slice(nodes.row(edge.src));
        row[h..].copy_from_slice(nodes.row(edge.dst));
    }
    Ok(out)
}

/// Gradient w.r.t. node embeddings given the gradient w.r.t. edge embeddings.
pub(crate) fn edge_embedding_backward(
    graph: &FlowGraph,
    d_edges: &DenseMatrix,
    hidden: usize,
) -> DenseMatrix {
    let mut d_nodes = DenseMatrix::zeros(graph.num_nodes(), hidden);
    for (e, edge) in graph.edges().iter().enumerate() {
        let g = d_edges.row(e);
        for (a, x) in d_nodes.row_mut(edge.src).iter_mut().zip(&g[..hidden]) {
            *a += x;
        }
        for (a, x) in d_nodes.row_mut(edge.dst).iter_mut().zip(&g[hidden..]) {
            *a += x;
        }
    }
    d_nodes
}

/// Weight gradients given `d_nodes = ∂L/∂z_v` for a recorded forward pass.
pub(crate) fn backward(
    graph: &FlowGraph,
    fwd: &Forward,
    params: &EncoderParams,
    d_nodes: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    let mut grads: Vec<DenseMatrix> = Vec::with_capacity(params.layers.len());
    let mut d_h = d_nodes.clone();
    for k in (0..params.layers.len()).rev() {
        let cache = &fwd.caches[k];
        let mut d_pre = d_h;
        for (g, &z) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        grads.push(cache.input.t_matmul(&d_pre)?);
        if k == 0 {
            // layer-0 input is built from constant node features and raw edge features
            break;
        }
        let d_input = d_pre.matmul_t(&params.layers[k])?;
        let p = (params.layers[k].rows() - graph.feature_dim()) / 2;
        let mut d_prev = DenseMatrix::zeros(graph.num_nodes(), p);
        for v in 0..graph.num_nodes() {
            let g = d_input.row(v);
            for (a, x) in d_prev.row_mut(v).iter_mut().zip(&g[..p]) {
                *a += x;
            }
            let incoming = graph.in_edges(v);
            if incoming.is_empty() {
                continue;
            }
            let scale = 1.0 / incoming.len() as f64;
            for &e in incoming {
                let u = graph.edges()[e].src;
                for (a, x) in d_prev.row_mut(u).iter_mut().zip(&g[p..2 * p]) {
                    *a += x * scale;
                }
            }
        }
        d_h = d_prev;
    }
    grads.reverse();
    Ok(grads)
}

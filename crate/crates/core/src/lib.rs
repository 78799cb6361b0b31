//! Self-supervised edge embeddings for network-flow graphs.
//!
//! The pipeline turns NetFlow records into a bidirectional flow graph, trains
//! a one-layer E-GraphSAGE encoder with a Deep Graph Infomax objective, and
//! feeds the resulting per-flow embeddings to four classical anomaly
//! detectors (PCA, Isolation Forest, CBLOF, HBOS).
//!
//! Stages map onto modules:
//!
//! - [`ingest`]: CSV loading, downsampling and train/test splitting
//! - [`preprocess`]: categorical encoding, non-finite cleanup, L2 normalisation
//! - [`graph`]: flow graph construction
//! - [`numeric`]: dense matrices, initialisation and the Adam optimiser
//! - [`encoder`]: E-GraphSAGE forward pass and its gradient
//! - [`dgi`]: corruption, readout, discriminator, loss and the training loop
//! - [`detectors`]: anomaly detectors, contamination thresholds, grid search
//! - [`eval`]: Accuracy / Macro F1 / Detection Rate and comparison tables

pub mod artifact;
pub mod detectors;
pub mod dgi;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod numeric;
pub mod preprocess;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
pub use graph::FlowGraph;
pub use ingest::{FlowRecord, Label};
pub use numeric::DenseMatrix;

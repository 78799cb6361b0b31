//! Python bindings: flow graphs, encoder training, detectors and metrics.

use anomale_core::detectors::{DetectorKind, DetectorModel};
use anomale_core::dgi::{self, ReadoutSource, TrainConfig, TrainOutcome};
use anomale_core::encoder::EncoderConfig;
use anomale_core::eval;
use anomale_core::{DenseMatrix, Label};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: anomale_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("matrix has no rows"));
    }
    DenseMatrix::from_rows(&rows).map_err(py_err)
}

fn labels(flags: Vec<bool>) -> Vec<Label> {
    flags
        .into_iter()
        .map(|a| if a { Label::Attack } else { Label::Benign })
        .collect()
}

/// Bidirectional flow graph: one node per address, two directed edges per flow.
#[pyclass(name = "FlowGraph", frozen)]
struct PyFlowGraph {
    inner: anomale_core::FlowGraph,
}

#[pymethods]
impl PyFlowGraph {
    #[new]
    fn new(src: Vec<String>, dst: Vec<String>, features: Vec<Vec<f64>>) -> PyResult<Self> {
        let x = matrix(features)?;
        let inner = anomale_core::FlowGraph::from_flows(&src, &dst, &x, None).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }
}

/// A trained edge encoder.
#[pyclass(name = "Encoder", frozen)]
struct PyEncoder {
    config: EncoderConfig,
    outcome: TrainOutcome,
}

#[pymethods]
impl PyEncoder {
    /// Trains on `graph` with the self-supervised objective.
    #[staticmethod]
    #[pyo3(signature = (graph, hidden_dim=128, depth=1, epochs=200, lr=0.003, seed=0, node_readout=false))]
    fn train(
        py: Python<'_>,
        graph: &PyFlowGraph,
        hidden_dim: usize,
        depth: usize,
        epochs: usize,
        lr: f64,
        seed: u64,
        node_readout: bool,
    ) -> PyResult<Self> {
        let config = EncoderConfig {
            depth,
            hidden_dim,
            input_dim: graph.inner.feature_dim(),
        };
        let tc = TrainConfig {
            epochs,
            lr,
            seed,
            readout: if node_readout { ReadoutSource::Nodes } else { ReadoutSource::Edges },
            ..TrainConfig::default()
        };
        let outcome = py
            .detach(|| dgi::train(&graph.inner, &config, &tc))
            .map_err(py_err)?;
        Ok(Self { config, outcome })
    }

    #[getter]
    fn loss_trace(&self) -> Vec<f64> {
        self.outcome.loss_trace.clone()
    }

    #[getter]
    fn embedding_dim(&self) -> usize {
        self.config.edge_embedding_dim()
    }

    /// One embedding row per flow of `graph`.
    fn embed(&self, py: Python<'_>, graph: &PyFlowGraph) -> PyResult<Vec<Vec<f64>>> {
        let m = py
            .detach(|| dgi::embed_flows(&graph.inner, &self.outcome.encoder, &self.config))
            .map_err(py_err)?;
        Ok(m.to_rows())
    }
}

/// Anomaly detector with a contamination threshold.
#[pyclass(name = "Detector", frozen)]
struct PyDetector {
    model: DetectorModel,
}

#[pymethods]
impl PyDetector {
    /// `kind` is one of pca, iforest, cblof, hbos; `param` is the number of
    /// components, trees, clusters or bins respectively.
    #[staticmethod]
    #[pyo3(signature = (kind, x, param, contamination=0.04, seed=0))]
    fn fit(
        py: Python<'_>,
        kind: &str,
        x: Vec<Vec<f64>>,
        param: usize,
        contamination: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let kind = DetectorKind::parse(kind).map_err(py_err)?;
        let x = matrix(x)?;
        let model = py
            .detach(|| DetectorModel::fit(kind, &x, param, contamination, seed))
            .map_err(py_err)?;
        Ok(Self { model })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.model.kind().as_str()
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.model.threshold
    }

    fn score(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.model.scorer.score(&matrix(x)?).map_err(py_err)
    }

    /// `True` marks a row as anomalous.
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<bool>> {
        Ok(self.model.predict(&matrix(x)?).map_err(py_err)?.1)
    }

    fn to_json(&self) -> PyResult<String> {
        self.model.to_json().map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self {
            model: DetectorModel::from_json(s).map_err(py_err)?,
        })
    }
}

/// Accuracy, macro F1 and detection rate; `is_attack` holds the ground truth.
#[pyfunction]
fn metrics<'py>(py: Python<'py>, flags: Vec<bool>, is_attack: Vec<bool>) -> PyResult<Bound<'py, PyDict>> {
    let (c, m) = eval::metrics(&flags, &labels(is_attack)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("macro_f1", m.macro_f1)?;
    d.set_item("detection_rate", m.detection_rate)?;
    d.set_item("tp", c.tp)?;
    d.set_item("fp", c.fp)?;
    d.set_item("tn", c.tn)?;
    d.set_item("fn", c.fn_)?;
    Ok(d)
}

#[pyfunction]
fn roc_auc(positive: Vec<f64>, negative: Vec<f64>) -> PyResult<f64> {
    eval::roc_auc(&positive, &negative).map_err(py_err)
}

#[pymodule]
fn anomale(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFlowGraph>()?;
    m.add_class::<PyEncoder>()?;
    m.add_class::<PyDetector>()?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    Ok(())
}

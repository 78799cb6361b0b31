//! Bidirectional flow multigraph.
//!
//! Nodes are endpoint addresses, numbered in order of first appearance. Flow
//! `i` becomes directed edge `2i` (source to destination) and `2i + 1`
//! (destination to source); both carry the flow's feature row. Parallel flows
//! are never merged.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FlowRecord, Label};
use crate::numeric::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub flow_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    /// One row per directed edge.
    edge_features: DenseMatrix,
    /// Incoming edge indices per node, ascending.
    in_edges: Vec<Vec<usize>>,
    labels: Option<Vec<Label>>,
}

impl FlowGraph {
    /// Builds the graph from per-flow endpoint keys and feature rows.
    pub fn from_flows<'a>(
        src: &'a [String],
        dst: &'a [String],
        features: &DenseMatrix,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        let flows = src.len();
        if dst.len() != flows || features.rows() != flows {
            return Err(Error::shape(
                "build_graph",
                format!(
                    "{flows} sources, {} destinations, {} feature rows",
                    dst.len(),
                    features.rows()
                ),
            ));
        }
        if let Some(l) = &labels {
            if l.len() != flows {
                return Err(Error::shape(
                    "build_graph",
                    format!("{} labels for {flows} flows", l.len()),
                ));
            }
        }

        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut nodes: Vec<String> = Vec::new();
        let mut edges = Vec::with_capacity(2 * flows);
        for (flow_id, (s, d)) in src.iter().zip(dst).enumerate() {
            let mut node_of = |key: &'a str| {
                *index.entry(key).or_insert_with(|| {
                    nodes.push(key.to_string());
                    nodes.len() - 1
                })
            };
            let u = node_of(s);
            let v = node_of(d);
            edges.push(Edge { src: u, dst: v, flow_id });
            edges.push(Edge { src: v, dst: u, flow_id });
        }

        let dim = features.cols();
        let mut edge_features = DenseMatrix::zeros(edges.len(), dim);
        for (e, edge) in edges.iter().enumerate() {
            edge_features.row_mut(e).copy_from_slice(features.row(edge.flow_id));
        }

        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (e, edge) in edges.iter().enumerate() {
            in_edges[edge.dst].push(e);
        }

        Ok(Self {
            nodes,
            edges,
            edge_features,
            in_edges,
            labels,
        })
    }

    /// Arbitrary directed multigraph; used by tests that need shapes
    /// `from_flows` never produces, such as isolated nodes.
    #[cfg(test)]
    pub(crate) fn from_directed(num_nodes: usize, arcs: &[(usize, usize)], edge_features: DenseMatrix) -> Self {
        let edges: Vec<Edge> = arcs
            .iter()
            .enumerate()
            .map(|(i, &(src, dst))| Edge { src, dst, flow_id: i })
            .collect();
        let mut in_edges = vec![Vec::new(); num_nodes];
        for (e, edge) in edges.iter().enumerate() {
            in_edges[edge.dst].push(e);
        }
        Self {
            nodes: (0..num_nodes).map(|i| format!("n{i}")).collect(),
            edges,
            edge_features,
            in_edges,
            labels: None,
        }
    }

    /// Same adjacency, different edge-feature matrix.
    pub fn with_edge_features(&self, edge_features: DenseMatrix) -> Result<Self> {
        if edge_features.rows() != self.edges.len() {
            return Err(Error::shape(
                "with_edge_features",
                format!("{} rows for {} edges", edge_features.rows(), self.edges.len()),
            ));
        }
        Ok(Self {
            edge_features,
            ..self.clone()
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_flows(&self) -> usize {
        self.edges.len() / 2
    }

    pub fn feature_dim(&self) -> usize {
        self.edge_features.cols()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_features(&self) -> &DenseMatrix {
        &self.edge_features
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    /// Constant all-ones node features, as wide as the edge features.
    pub fn node_features(&self) -> DenseMatrix {
        DenseMatrix::filled(self.num_nodes(), self.feature_dim(), 1.0)
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_edges[v].len()
    }

    /// `(source node, edge index)` for every edge ending at `v`.
    pub fn in_neighbors(&self, v: usize) -> Vec<(usize, usize)> {
        self.in_edges[v]
            .iter()
            .map(|&e| (self.edges[e].src, e))
            .collect()
    }

    /// Index of the source-to-destination edge of every flow.
    pub fn forward_edges(&self) -> Vec<usize> {
        (0..self.num_flows()).map(|f| 2 * f).collect()
    }

    /// Writes `nodes.csv` and `edges.csv` into `dir` for inspection.
    pub fn dump_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut nodes = csv::Writer::from_path(dir.join("nodes.csv"))?;
        nodes.write_record(["node", "address", "in_degree"])?;
        for (i, key) in self.nodes.iter().enumerate() {
            nodes.write_record([i.to_string(), key.clone(), self.in_degree(i).to_string()])?;
        }
        nodes.flush().map_err(|e| Error::io(dir.join("nodes.csv"), e))?;

        let mut edges = csv::Writer::from_path(dir.join("edges.csv"))?;
        edges.write_record(["edge", "src", "dst", "flow_id", "label"])?;
        for (i, e) in self.edges.iter().enumerate() {
            let label = match self.labels.as_ref().map(|l| l[e.flow_id]) {
                Some(Label::Attack) => "attack",
                Some(Label::Benign) => "benign",
                None => "",
            };
            edges.write_record([
                i.to_string(),
                e.src.to_string(),
                e.dst.to_string(),
                e.flow_id.to_string(),
                label.to_string(),
            ])?;
        }
        edges.flush().map_err(|e| Error::io(dir.join("edges.csv"), e))
    }
}

/// Builds the flow graph for `records`, whose feature rows are `features`.
pub fn build_graph(records: &[FlowRecord], features: &DenseMatrix) -> Result<FlowGraph> {
    if records.len() != features.rows() {
        return Err(Error::shape(
            "build_graph",
            format!("{} records, {} feature rows", records.len(), features.rows()),
        ));
    }
    let src: Vec<String> = records.iter().map(|r| r.src_ip.clone()).collect();
    let dst: Vec<String> = records.iter().map(|r| r.dst_ip.clone()).collect();
    let labels: Option<Vec<Label>> = records.iter().map(|r| r.label).collect();
    FlowGraph::from_flows(&src, &dst, features, labels)
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn keys(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn graph(pairs: &[(&str, &str)]) -> FlowGraph {
        let src = keys(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
        let dst = keys(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        let x = DenseMatrix::from_rows(
            &(0..pairs.len()).map(|i| vec![i as f64, 1.0]).collect::<Vec<_>>(),
        )
        .unwrap();
        FlowGraph::from_flows(&src, &dst, &x, None).unwrap()
    }

    #[test]
    fn single_flow_is_two_directed_edges() {
        let g = graph(&[("A", "B")]);
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.edges()[0], Edge { src: 0, dst: 1, flow_id: 0 });
        assert_eq!(g.edges()[1], Edge { src: 1, dst: 0, flow_id: 0 });
        assert_eq!(g.in_neighbors(0), vec![(1, 1)]);
        assert_eq!(g.edge_features().row(0), g.edge_features().row(1));
        let ones = g.node_features();
        assert_eq!(ones.shape(), (2, 2));
        assert!(ones.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn parallel_flows_are_kept() {
        let g = graph(&[("A", "B"), ("A", "B")]);
        assert_eq!((g.num_nodes(), g.num_edges()), (2, 4));
    }

    #[test]
    fn path_in_degrees() {
        let g = graph(&[("A", "B"), ("B", "C")]);
        assert_eq!((g.num_nodes(), g.num_edges()), (3, 4));
        assert_eq!(g.in_degree(1), 2);
        assert_eq!(g.in_degree(0), 1);
    }

    #[test]
    fn in_neighbors_lists_sources_in_edge_order() {
        let g = graph(&[("A", "B"), ("C", "B")]);
        // B is node 1; A→B is edge 0 and C→B is edge 2
        assert_eq!(g.in_neighbors(1), vec![(0, 0), (2, 2)]);
    }

    #[test]
    fn isolated_node_has_no_in_neighbors() {
        // Self-loop flows only touch one node; a graph with no flows has none.
        let g = FlowGraph::from_flows(&[], &[], &DenseMatrix::zeros(0, 3), None).unwrap();
        assert_eq!(g.num_nodes(), 0);
        let g = graph(&[("A", "A")]);
        assert_eq!(g.in_neighbors(0).len(), 2);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let err = FlowGraph::from_flows(&keys(&["A"]), &keys(&["B"]), &DenseMatrix::zeros(2, 1), None);
        assert!(matches!(err, Err(Error::Shape { .. })));
    }

    #[test]
    fn csv_dump_writes_both_tables() {
        let g = graph(&[("A", "B"), ("B", "C")]);
        let dir = tempfile::tempdir().unwrap();
        g.dump_csv(dir.path()).unwrap();
        let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
        assert_eq!(edges.lines().count(), 5);
        let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
        assert!(nodes.contains("1,B,2"));
    }

    proptest! {
        #[test]
        fn degree_sum_and_determinism(
            pairs in prop::collection::vec((0u8..6, 0u8..6), 0..40)
        ) {
            let src: Vec<String> = pairs.iter().map(|p| format!("n{}", p.0)).collect();
            let dst: Vec<String> = pairs.iter().map(|p| format!("n{}", p.1)).collect();
            let x = DenseMatrix::filled(pairs.len(), 2, 0.5);
            let g = FlowGraph::from_flows(&src, &dst, &x, None).unwrap();
            let total: usize = (0..g.num_nodes()).map(|v| g.in_degree(v)).sum();
            prop_assert_eq!(total, 2 * pairs.len());
            prop_assert_eq!(g.num_edges(), 2 * pairs.len());
            for e in g.edges() {
                prop_assert!(e.src < g.num_nodes() && e.dst < g.num_nodes());
            }
            let again = FlowGraph::from_flows(&src, &dst, &x, None).unwrap();
            prop_assert_eq!(g, again);
        }
    }
}

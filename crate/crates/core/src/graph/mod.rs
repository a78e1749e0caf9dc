//! Graph structure, symmetric adjacency normalization, and dataset ingestion.

mod dataset;
mod io;
pub mod synthetic;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub use dataset::{planetoid_split, NodeDataset, Splits};
pub use io::{load_cora_format, load_edge_list, load_labels, load_splits, parse_edge_list, CoraLoad};

/// Raw undirected edge set as read from disk, before normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub num_nodes: usize,
    /// Canonical `(min, max)` pairs, deduplicated and sorted.
    pub edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Canonicalizes direction and drops duplicates.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let set: BTreeSet<(usize, usize)> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        Self {
            num_nodes,
            edges: set.into_iter().collect(),
        }
    }
}

/// Self-loop augmented, symmetrically normalized adjacency `D̃^{-1/2}(A + I)D̃^{-1/2}` in CSR form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    degrees: Vec<usize>,
}

/// Builds the normalized adjacency. Directed input is symmetrized, duplicate
/// edges collapse, and each node carries exactly one self-loop.
pub fn normalize_adjacency(edges: &EdgeList) -> Result<Graph> {
    let n = edges.num_nodes;
    let mut neighbors: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    for &(a, b) in &edges.edges {
        for id in [a, b] {
            if id >= n {
                return Err(Error::Ingestion { id, num_nodes: n });
            }
        }
        neighbors[a].insert(b);
        neighbors[b].insert(a);
    }

    let degrees: Vec<usize> = neighbors.iter().map(BTreeSet::len).collect();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    for (i, row) in neighbors.iter().enumerate() {
        for &j in row {
            col_indices.push(j);
            values.push(1.0 / ((degrees[i] * degrees[j]) as f64).sqrt());
        }
        row_offsets.push(col_indices.len());
    }
    Ok(Graph {
        num_nodes: n,
        row_offsets,
        col_indices,
        values,
        degrees,
    })
}

impl Graph {
    pub fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        normalize_adjacency(&EdgeList::new(num_nodes, edges))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Undirected edges excluding self-loops.
    pub fn num_edges(&self) -> usize {
        (self.col_indices.len() - self.num_nodes) / 2
    }

    /// Stored entries of Â, self-loops included.
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Self-loop augmented degree d̃ of each node.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `(column, Â value)` pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.num_nodes, self.num_nodes);
        for i in 0..self.num_nodes {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// `Â · h`. Since Â is symmetric this is also `Âᵀ · h`.
    pub fn spmm(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        if h.rows() != self.num_nodes {
            return Err(Error::shape(
                "spmm",
                format!("{} rows", self.num_nodes),
                format!("{}x{}", h.rows(), h.cols()),
            ));
        }
        let mut out = DenseMatrix::zeros(h.rows(), h.cols());
        for i in 0..self.num_nodes {
            let out_row = out.row_mut(i);
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let a = self.values[k];
                for (o, &x) in out_row.iter_mut().zip(h.row(self.col_indices[k])) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    /// `Â^k · h`
    pub fn propagate(&self, h: &DenseMatrix, steps: usize) -> Result<DenseMatrix> {
        let mut out = h.clone();
        for _ in 0..steps {
            out = self.spmm(&out)?;
        }
        Ok(out)
    }
}

pub fn spmm(graph: &Graph, h: &DenseMatrix) -> Result<DenseMatrix> {
    graph.spmm(h)
}

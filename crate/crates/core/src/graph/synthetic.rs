//! Stochastic block model graphs with class-conditional Gaussian features,
//! used when no citation dataset is available.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{planetoid_split, Graph, NodeDataset};
use crate::error::Result;
use crate::linalg::random::gaussian;
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbmConfig {
    pub nodes: usize,
    pub classes: usize,
    /// Edge probability inside a block.
    pub p_in: f64,
    /// Edge probability across blocks.
    pub p_out: f64,
    pub feature_dim: usize,
    /// Standard deviation of the per-node feature noise around the class centroid.
    pub feature_noise: f64,
    pub train_per_class: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            nodes: 500,
            classes: 5,
            p_in: 0.05,
            p_out: 0.005,
            feature_dim: 32,
            feature_noise: 2.0,
            train_per_class: 20,
            val: 150,
            test: 250,
            seed: 0,
        }
    }
}

pub fn sbm_dataset(cfg: &SbmConfig) -> Result<NodeDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = (0..cfg.nodes).map(|i| i * cfg.classes / cfg.nodes.max(1)).collect();

    let mut edges = Vec::new();
    for i in 0..cfg.nodes {
        for j in (i + 1)..cfg.nodes {
            let p = if labels[i] == labels[j] { cfg.p_in } else { cfg.p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(cfg.nodes, edges)?;

    let centroids = gaussian(cfg.classes, cfg.feature_dim, 1.0, &mut rng);
    let noise = gaussian(cfg.nodes, cfg.feature_dim, cfg.feature_noise, &mut rng);
    let features = DenseMatrix::from_fn(cfg.nodes, cfg.feature_dim, |i, j| centroids[(labels[i], j)] + noise[(i, j)]);

    let splits = planetoid_split(&labels, cfg.classes, cfg.train_per_class, cfg.val, cfg.test, cfg.seed)?;
    NodeDataset::new(graph, features, labels, cfg.classes, splits)
}

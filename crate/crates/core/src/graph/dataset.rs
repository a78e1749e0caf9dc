use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Train/validation/test node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Checks that every index is below `n` and the three sets are disjoint.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = HashSet::new();
        for (name, idx) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in idx {
                if i >= n {
                    return Err(Error::Split(format!("{name} index {i} out of range for {n} nodes")));
                }
                if !seen.insert(i) {
                    return Err(Error::Split(format!("index {i} appears more than once (in {name})")));
                }
            }
        }
        Ok(())
    }
}

/// Node features, labels and splits on top of a normalized graph.
#[derive(Debug, Clone)]
pub struct NodeDataset {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub splits: Splits,
    /// Class index → original label string, when the source had names.
    pub label_names: Vec<String>,
}

impl NodeDataset {
    pub fn new(graph: Graph, features: DenseMatrix, labels: Vec<usize>, num_classes: usize, splits: Splits) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(Error::shape("NodeDataset::new", format!("{n} feature rows"), features.rows()));
        }
        if labels.len() != n {
            return Err(Error::shape("NodeDataset::new", format!("{n} labels"), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::contract("NodeDataset::new", format!("label {bad} >= num_classes {num_classes}")));
        }
        splits.validate(n)?;
        Ok(Self {
            graph,
            features,
            labels,
            num_classes,
            splits,
            label_names: Vec::new(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        splits.validate(self.num_nodes())?;
        self.splits = splits;
        Ok(self)
    }

    /// Scales each feature row to unit L1 norm; all-zero rows stay zero.
    pub fn row_normalize_features(&mut self) {
        for i in 0..self.features.rows() {
            let row = self.features.row_mut(i);
            let sum: f64 = row.iter().map(|v| v.abs()).sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }
}

/// Per-class training nodes followed by validation and test blocks, drawn
/// from a seeded shuffle. Classes with fewer than `per_class` members
/// contribute all of them.
pub fn planetoid_split(labels: &[usize], num_classes: usize, per_class: usize, val: usize, test: usize, seed: u64) -> Result<Splits> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng);

    let mut taken = vec![0usize; num_classes];
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for &i in &order {
        let c = labels[i];
        if c < num_classes && taken[c] < per_class {
            taken[c] += 1;
            train.push(i);
        } else {
            rest.push(i);
        }
    }
    if rest.len() < val + test {
        return Err(Error::Split(format!(
            "{} nodes left after training picks; {val} val + {test} test requested",
            rest.len()
        )));
    }
    train.sort_unstable();
    let mut val_idx = rest[..val].to_vec();
    let mut test_idx = rest[val..val + test].to_vec();
    val_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(Splits {
        train,
        val: val_idx,
        test: test_idx,
    })
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{accuracy, adam_update, masked_cross_entropy, train_with, ModelConfig, TrainOptions};
use crate::error::{Error, Result};
use crate::graph::NodeDataset;
use crate::linalg::DenseMatrix;
use crate::ortho::OrthoConfig;

use super::steadiness::{graph_smoothness, signal_magnification, steadiness_report, SteadinessReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Plain GCN with Glorot weights.
    Vanilla,
    /// Hybrid init, Newton orthogonalization, and the regularizer.
    Ortho,
    /// `Â^L X` followed by a linear probe; no trainable propagation weights.
    AggregationOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Vanilla, Variant::Ortho, Variant::AggregationOnly];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Ortho => "ortho",
            Variant::AggregationOnly => "aggregation_only",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::contract("Variant::from_str", format!("unknown variant {s:?}")))
    }
}

/// Hyperparameters shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Settings for the `ortho` variant; `vanilla` always uses
    /// [`OrthoConfig::vanilla`].
    pub ortho: OrthoConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.0,
            epochs: 200,
            seed: 0,
            ortho: OrthoConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn model_config(&self, dataset: &NodeDataset, depth: usize, variant: Variant) -> ModelConfig {
        let mut cfg = ModelConfig::new(dataset.num_features(), self.hidden_dim, dataset.num_classes, depth);
        cfg.learning_rate = self.learning_rate;
        cfg.weight_decay = self.weight_decay;
        cfg.dropout = self.dropout;
        cfg.epochs = self.epochs;
        cfg.seed = self.seed;
        cfg.ortho = match variant {
            Variant::Ortho => self.ortho.clone(),
            _ => OrthoConfig::vanilla(),
        };
        cfg
    }
}

/// One (depth, variant) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub depth: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Test accuracy at the best-validation epoch.
    pub accuracy: Option<f64>,
    pub msig: Option<f64>,
    pub smoothness: Option<f64>,
    /// Gradient norms of the first epoch (trained variants only).
    pub initial_grad_norms: Option<Vec<f64>>,
    /// Steadiness of the selected parameters (trained variants only).
    pub report: Option<SteadinessReport>,
    pub error: Option<String>,
}

/// Runs a single cell; failures are folded into `error`.
pub fn run_cell(dataset: &NodeDataset, depth: usize, variant: Variant, config: &SweepConfig) -> SweepCell {
    let mut cell = SweepCell {
        depth,
        variant,
        seed: config.seed,
        accuracy: None,
        msig: None,
        smoothness: None,
        initial_grad_norms: None,
        report: None,
        error: None,
    };
    let result = match variant {
        Variant::AggregationOnly => aggregation_cell(dataset, depth, config, &mut cell),
        _ => trained_cell(dataset, depth, variant, config, &mut cell),
    };
    if let Err(e) = result {
        log::warn!("sweep cell depth={depth} variant={variant} failed: {e}");
        cell.error = Some(e.to_string());
    }
    cell
}

fn trained_cell(dataset: &NodeDataset, depth: usize, variant: Variant, config: &SweepConfig, cell: &mut SweepCell) -> Result<()> {
    let model = config.model_config(dataset, depth, variant);
    let mut outcome = train_with(model, dataset, &TrainOptions::default())?;
    cell.initial_grad_norms = outcome.history.first().map(|m| m.grad_norms.clone());
    cell.accuracy = outcome.test_acc_at_best;
    let report = steadiness_report(&mut outcome.state, dataset, outcome.best_epoch.unwrap_or(0))?;
    cell.msig = Some(report.signal_magnification);
    cell.smoothness = Some(report.smoothness);
    cell.report = Some(report);
    Ok(())
}

fn aggregation_cell(dataset: &NodeDataset, depth: usize, config: &SweepConfig, cell: &mut SweepCell) -> Result<()> {
    let propagated = dataset.graph.propagate(&dataset.features, depth)?;
    cell.msig = Some(signal_magnification(&dataset.features, &propagated)?.value);
    cell.smoothness = Some(graph_smoothness(&propagated).value);
    cell.accuracy = linear_probe(&propagated, dataset, config)?;
    Ok(())
}

/// Softmax regression on fixed features, trained with Adam on the training
/// split; returns test accuracy at the best validation epoch.
pub fn linear_probe(features: &DenseMatrix, dataset: &NodeDataset, config: &SweepConfig) -> Result<Option<f64>> {
    let splits = &dataset.splits;
    if splits.train.is_empty() {
        return Err(Error::Split("training split is empty".into()));
    }
    let (d, k) = (features.cols(), dataset.num_classes);
    let mut w = DenseMatrix::zeros(d, k);
    let mut m = vec![0.0; d * k];
    let mut v = vec![0.0; d * k];
    let mut best: Option<(f64, Option<f64>)> = None;
    for step in 1..=config.epochs {
        let logits = features.matmul(&w)?;
        let (_, grad_logits) = masked_cross_entropy(&logits, &dataset.labels, &splits.train)?;
        let grad = features.t_matmul(&grad_logits)?;
        adam_update(w.data_mut(), grad.data(), &mut m, &mut v, config.learning_rate, config.weight_decay, step);

        let logits = features.matmul(&w)?;
        let selection = if splits.val.is_empty() {
            accuracy(&logits, &dataset.labels, &splits.train)?
        } else {
            accuracy(&logits, &dataset.labels, &splits.val)?
        };
        if best.is_none_or(|b| selection > b.0) {
            let test = if splits.test.is_empty() {
                None
            } else {
                Some(accuracy(&logits, &dataset.labels, &splits.test)?)
            };
            best = Some((selection, test));
        }
    }
    Ok(best.and_then(|b| b.1))
}

/// Every `(depth, variant)` pair in order, depths outermost.
pub fn depth_sweep(dataset: &NodeDataset, depths: &[usize], variants: &[Variant], config: &SweepConfig) -> Result<Vec<SweepCell>> {
    if depths.is_empty() {
        return Err(Error::contract("depth_sweep", "no depths given"));
    }
    Ok(depths
        .iter()
        .flat_map(|&depth| variants.iter().map(move |&variant| (depth, variant)))
        .map(|(depth, variant)| run_cell(dataset, depth, variant, config))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::synthetic::{sbm_dataset, SbmConfig};
    use crate::graph::{Graph, Splits};

    fn tiny() -> NodeDataset {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let x = DenseMatrix::from_fn(5, 3, |i, j| ((i + 2 * j) % 4) as f64 - 1.0);
        let splits = Splits {
            train: vec![0, 3],
            val: vec![1, 4],
            test: vec![2],
        };
        NodeDataset::new(g, x, vec![0, 0, 0, 1, 1], 2, splits).unwrap()
    }

    #[test]
    fn aggregation_only_single_step_is_one_propagation() {
        let ds = tiny();
        let cfg = SweepConfig {
            epochs: 5,
            ..Default::default()
        };
        let cell = run_cell(&ds, 1, Variant::AggregationOnly, &cfg);
        let h = ds.graph.spmm(&ds.features).unwrap();
        assert_eq!(cell.smoothness, Some(graph_smoothness(&h).value));
        assert_eq!(cell.msig, Some(signal_magnification(&ds.features, &h).unwrap().value));
        assert!(cell.error.is_none());
    }

    #[test]
    fn sweep_covers_the_grid() {
        let ds = tiny();
        let cfg = SweepConfig {
            hidden_dim: 4,
            epochs: 3,
            ..Default::default()
        };
        let cells = depth_sweep(&ds, &[2, 3], &Variant::ALL, &cfg).unwrap();
        assert_eq!(cells.len(), 6);
        assert!(cells.iter().all(|c| c.error.is_none()));
        assert_eq!((cells[3].depth, cells[3].variant), (3, Variant::Vanilla));
        assert!(depth_sweep(&ds, &[], &Variant::ALL, &cfg).is_err());
    }

    #[test]
    fn failures_are_recorded_not_raised() {
        let ds = tiny().with_splits(Splits::default()).unwrap();
        let cell = run_cell(&ds, 2, Variant::Vanilla, &SweepConfig::default());
        assert!(cell.error.is_some());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("gat".parse::<Variant>().is_err());
    }

    #[test]
    fn probe_learns_separated_clusters() {
        let ds = sbm_dataset(&SbmConfig {
            nodes: 120,
            classes: 3,
            feature_noise: 0.3,
            train_per_class: 10,
            val: 30,
            test: 50,
            ..Default::default()
        })
        .unwrap();
        let acc = linear_probe(&ds.features, &ds, &SweepConfig::default()).unwrap().unwrap();
        assert!(acc > 0.9, "{acc}");
    }
}

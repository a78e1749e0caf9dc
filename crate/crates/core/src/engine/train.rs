use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{graph_smoothness, signal_magnification};
use crate::error::{Error, Result};
use crate::graph::NodeDataset;
use crate::ortho::OrthoLayerParams;

use super::loss::accuracy;
use super::model::ModelState;
use super::optim::adam_step;
use super::ModelConfig;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Record `M_sig` and smoothness every this many epochs (also on the
    /// last epoch). `None` skips them.
    pub steadiness_every: Option<usize>,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub aux_loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
    /// Task-loss gradient norms per layer, taken before the optimizer step.
    pub grad_norms: Vec<f64>,
    pub msig: Option<f64>,
    pub smoothness: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Holds the best-validation parameters once training ran.
    pub state: ModelState,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: Option<usize>,
    pub best_val_acc: Option<f64>,
    pub test_acc_at_best: Option<f64>,
}

pub fn train(config: ModelConfig, dataset: &NodeDataset) -> Result<TrainOutcome> {
    train_with(config, dataset, &TrainOptions::default())
}

/// Full-batch training with Adam. Model selection uses validation accuracy,
/// or training accuracy when the validation split is empty.
pub fn train_with(config: ModelConfig, dataset: &NodeDataset, options: &TrainOptions) -> Result<TrainOutcome> {
    if config.input_dim != dataset.num_features() {
        return Err(Error::shape("train", format!("{} input features", config.input_dim), dataset.num_features()));
    }
    if config.num_classes < dataset.num_classes {
        return Err(Error::shape("train", format!("at least {} classes", dataset.num_classes), config.num_classes));
    }
    let splits = &dataset.splits;
    if splits.train.is_empty() {
        return Err(Error::Split("training split is empty".into()));
    }
    let mut state = ModelState::init(config)?;
    let epochs = state.config.epochs;
    let (lr, wd) = (state.config.learning_rate, state.config.weight_decay);

    let mut history = Vec::with_capacity(epochs);
    let mut best: Option<(f64, usize, Option<f64>, Vec<OrthoLayerParams>)> = None;

    for epoch in 1..=epochs {
        state.epoch = epoch;
        let (task, aux, grads) = state.loss_and_gradients(dataset, &splits.train, true)?;
        let total = task + aux;
        if !total.is_finite() {
            return Err(Error::Diverged { epoch, loss: total });
        }
        let grad_norms = state.gradient_norms()?;
        adam_step(&mut state, &grads, lr, wd, epoch);

        let logits = state.forward(dataset, false)?;
        let train_acc = accuracy(&logits, &dataset.labels, &splits.train)?;
        let val_acc = optional_accuracy(&logits, dataset, &splits.val)?;
        let test_acc = optional_accuracy(&logits, dataset, &splits.test)?;

        let record_steadiness = options
            .steadiness_every
            .is_some_and(|k| k > 0 && (epoch % k == 0 || epoch == epochs));
        let (msig, smoothness) = if record_steadiness {
            let msig = signal_magnification(&dataset.features, &logits).map(|m| m.value).ok();
            let smooth = graph_smoothness(&logits).value;
            (msig, Some(smooth))
        } else {
            (None, None)
        };
        state.clear_tape();

        let selection = val_acc.unwrap_or(train_acc);
        if best.as_ref().is_none_or(|b| selection > b.0) {
            best = Some((selection, epoch, test_acc, state.layers.clone()));
        }
        debug!("epoch {epoch}: loss {task:.5} aux {aux:.3e} train {train_acc:.4} val {val_acc:?}");
        history.push(EpochMetrics {
            epoch,
            train_loss: task,
            aux_loss: aux,
            train_acc,
            val_acc,
            test_acc,
            grad_norms,
            msig,
            smoothness,
        });
    }

    let (mut best_epoch, mut best_val_acc, mut test_acc_at_best) = (None, None, None);
    if let Some((sel, epoch, test, layers)) = best {
        info!("best epoch {epoch} with selection accuracy {sel:.4}");
        state.layers = layers;
        best_epoch = Some(epoch);
        best_val_acc = if splits.val.is_empty() { None } else { Some(sel) };
        test_acc_at_best = test;
    }
    Ok(TrainOutcome {
        state,
        history,
        best_epoch,
        best_val_acc,
        test_acc_at_best,
    })
}

fn optional_accuracy(logits: &crate::DenseMatrix, dataset: &NodeDataset, mask: &[usize]) -> Result<Option<f64>> {
    if mask.is_empty() {
        Ok(None)
    } else {
        accuracy(logits, &dataset.labels, mask).map(Some)
    }
}

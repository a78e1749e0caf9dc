//! GCN forward/backward stack, loss, optimizer, and training loop.

mod layer;
mod loss;
mod model;
mod optim;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ortho::OrthoConfig;

pub use layer::{gcn_layer_backward, gcn_layer_forward, LayerCache};
pub use loss::{accuracy, argmax_rows, masked_cross_entropy};
pub use model::{model_forward, Gradients, ModelState};
pub use optim::{adam_step, adam_update, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use train::{train, train_with, EpochMetrics, TrainOptions, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Model depth L.
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub input_dim: usize,
    pub num_classes: usize,
    /// Nonlinearity between layers; the last layer is always linear.
    pub activation: Activation,
    pub ortho: OrthoConfig,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Plain GCN defaults for the given shape.
    pub fn new(input_dim: usize, hidden_dim: usize, num_classes: usize, num_layers: usize) -> Self {
        Self {
            num_layers,
            hidden_dim,
            input_dim,
            num_classes,
            activation: Activation::Relu,
            ortho: OrthoConfig::vanilla(),
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.0,
            epochs: 200,
            seed: 0,
        }
    }

    pub fn with_ortho(mut self, ortho: OrthoConfig) -> Self {
        self.ortho = ortho;
        self
    }

    /// `(d_in, d_out)` per layer: input → hidden, hidden → hidden, hidden → classes.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        match self.num_layers {
            0 => Vec::new(),
            1 => vec![(self.input_dim, self.num_classes)],
            l => {
                let mut dims = vec![(self.input_dim, self.hidden_dim)];
                dims.extend(std::iter::repeat_n((self.hidden_dim, self.hidden_dim), l - 2));
                dims.push((self.hidden_dim, self.num_classes));
                dims
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let op = "ModelConfig";
        if self.num_layers == 0 {
            return Err(Error::contract(op, "num_layers must be at least 1"));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 || self.num_classes == 0 {
            return Err(Error::contract(op, "dimensions must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::contract(op, format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::contract(op, "learning_rate must be > 0 and weight_decay >= 0"));
        }
        self.ortho.validate()
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeDataset};
use crate::linalg::DenseMatrix;
use crate::ortho::{hybrid_init_with, ortho_regularizer, OrthoConfig, OrthoLayerParams, RegularizerOutput, TransformRecord};

use super::layer::{backward_inner, gcn_layer_forward, LayerCache};
use super::loss::masked_cross_entropy;
use super::optim::AdamState;
use super::{Activation, ModelConfig};

struct TapeEntry {
    cache: LayerCache,
    transform: TransformRecord,
    /// Multiplier applied to the effective weight in the forward pass.
    forward_scale: f64,
    dropout_mask: Option<DenseMatrix>,
    output: DenseMatrix,
}

struct Tape {
    entries: Vec<TapeEntry>,
    /// Layer indices that the regularizer covers, with its output.
    regularized: Vec<usize>,
    regularizer: RegularizerOutput,
}

/// Gradients of the total loss (task + auxiliary).
#[derive(Debug, Clone)]
pub struct Gradients {
    /// With respect to each raw weight Q.
    pub weights: Vec<DenseMatrix>,
    /// With respect to each scale c.
    pub scales: Vec<f64>,
    /// Task-loss gradient with respect to the weight each layer applied.
    pub effective: Vec<DenseMatrix>,
    pub aux_loss: f64,
}

/// Layer parameters, optimizer moments, and the activation tape of the last
/// forward pass.
pub struct ModelState {
    pub config: ModelConfig,
    pub layers: Vec<OrthoLayerParams>,
    optimizer: AdamState,
    tape: Option<Tape>,
    last_grad_norms: Option<Vec<f64>>,
    /// Epoch counter feeding the dropout masks.
    pub epoch: usize,
}

impl Clone for ModelState {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            layers: self.layers.clone(),
            optimizer: self.optimizer.clone(),
            tape: None,
            last_grad_norms: self.last_grad_norms.clone(),
            epoch: self.epoch,
        }
    }
}

impl std::fmt::Debug for ModelState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelState")
            .field("config", &self.config)
            .field("layers", &self.layers.len())
            .field("epoch", &self.epoch)
            .field("taped", &self.tape.is_some())
            .finish()
    }
}

fn is_hidden(l: usize, depth: usize) -> bool {
    l > 0 && l + 1 < depth
}

fn mix_seed(seed: u64, epoch: usize, layer: usize) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed
        .wrapping_add((epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((layer as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ModelState {
    /// Hybrid-initialized layers drawn from one generator seeded with `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let depth = config.num_layers;
        let layers = config
            .layer_dims()
            .into_iter()
            .enumerate()
            .map(|(l, (d_in, d_out))| {
                let beta = if is_hidden(l, depth) { config.ortho.beta } else { 1.0 };
                OrthoLayerParams::new(hybrid_init_with(d_in, d_out, beta, &mut rng))
            })
            .collect();
        Self::from_layers(config, layers)
    }

    /// Wraps explicit parameters; shapes must follow `config.layer_dims()`.
    pub fn from_layers(config: ModelConfig, layers: Vec<OrthoLayerParams>) -> Result<Self> {
        let dims = config.layer_dims();
        if dims.len() != layers.len() {
            return Err(Error::shape("ModelState::from_layers", format!("{} layers", dims.len()), layers.len()));
        }
        for (l, (p, &(r, c))) in layers.iter().zip(&dims).enumerate() {
            if p.raw_weight.shape() != (r, c) {
                return Err(Error::shape(
                    "ModelState::from_layers",
                    format!("layer {l}: {r}x{c}"),
                    format!("{:?}", p.raw_weight.shape()),
                ));
            }
        }
        Ok(Self {
            optimizer: AdamState::new(&layers),
            config,
            layers,
            tape: None,
            last_grad_norms: None,
            epoch: 0,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Transformation settings for layer `l`. Input and output layers are
    /// plain linear maps; only hidden layers get the orthogonal treatment.
    pub fn layer_ortho(&self, l: usize) -> OrthoConfig {
        if is_hidden(l, self.layers.len()) {
            self.config.ortho.clone()
        } else {
            OrthoConfig {
                enabled: false,
                ..self.config.ortho.clone()
            }
        }
    }

    /// Effective weights without touching the tape.
    pub fn effective_weights(&self) -> Result<Vec<DenseMatrix>> {
        (0..self.layers.len())
            .map(|l| self.layers[l].effective_weight(&self.layer_ortho(l)))
            .collect()
    }

    pub fn forward(&mut self, dataset: &NodeDataset, train_mode: bool) -> Result<DenseMatrix> {
        self.forward_features(&dataset.graph, &dataset.features, train_mode)
    }

    /// Forward pass from an explicit input `H^(0)`.
    pub fn forward_features(&mut self, graph: &Graph, features: &DenseMatrix, train_mode: bool) -> Result<DenseMatrix> {
        self.tape = None;
        self.last_grad_norms = None;
        let cfg = &self.config;
        let depth = self.layers.len();
        let mut entries = Vec::with_capacity(depth);
        let mut h = features.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let transform = TransformRecord::forward(&layer.raw_weight, &self.layer_ortho(l))?;
            let forward_scale = if cfg.ortho.scale_forward && transform.applied {
                layer.scale.max(0.0).sqrt()
            } else {
                1.0
            };
            let weight = if forward_scale == 1.0 {
                transform.weight.clone()
            } else {
                transform.weight.scale(forward_scale)
            };

            let dropout_mask = if train_mode && cfg.dropout > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, self.epoch, l));
                let keep = 1.0 / (1.0 - cfg.dropout);
                let mask = DenseMatrix::from_fn(h.rows(), h.cols(), |_, _| {
                    if rng.random::<f64>() < cfg.dropout {
                        0.0
                    } else {
                        keep
                    }
                });
                h = h.hadamard(&mask)?;
                Some(mask)
            } else {
                None
            };

            let activation = if l + 1 == depth { Activation::Identity } else { cfg.activation };
            let (out, cache) = gcn_layer_forward(graph, &h, &weight, activation)?;
            h = out;
            entries.push(TapeEntry {
                cache,
                transform,
                forward_scale,
                dropout_mask,
                output: h.clone(),
            });
        }

        let regularized: Vec<usize> = if cfg.ortho.lambda > 0.0 {
            (0..depth).filter(|&l| entries[l].transform.applied).collect()
        } else {
            Vec::new()
        };
        let weights: Vec<&DenseMatrix> = regularized.iter().map(|&l| &entries[l].transform.weight).collect();
        let scales: Vec<f64> = regularized.iter().map(|&l| self.layers[l].scale).collect();
        let regularizer = ortho_regularizer(&weights, &scales, cfg.ortho.lambda, cfg.ortho.penalty)?;

        self.tape = Some(Tape {
            entries,
            regularized,
            regularizer,
        });
        Ok(h)
    }

    /// Auxiliary (orthogonal regularizer) loss of the last forward pass.
    pub fn aux_loss(&self) -> Option<f64> {
        self.tape.as_ref().map(|t| t.regularizer.loss)
    }

    /// `H^(1..=L)` from the last forward pass.
    pub fn layer_outputs(&self) -> Option<Vec<&DenseMatrix>> {
        self.tape.as_ref().map(|t| t.entries.iter().map(|e| &e.output).collect())
    }

    /// Newton residual traces of the last forward pass, one per layer (empty
    /// when the layer was not transformed).
    pub fn newton_residuals(&self) -> Option<Vec<&[f64]>> {
        self.tape
            .as_ref()
            .map(|t| t.entries.iter().map(|e| e.transform.residuals.as_slice()).collect())
    }

    /// Backpropagates `∂L_task/∂logits` through every layer, adds the
    /// regularizer, and differentiates through the orthogonal transformation.
    pub fn backward(&mut self, graph: &Graph, grad_logits: &DenseMatrix) -> Result<Gradients> {
        let tape = self
            .tape
            .as_ref()
            .ok_or_else(|| Error::contract("ModelState::backward", "no forward pass recorded"))?;
        let depth = tape.entries.len();
        let mut effective = vec![DenseMatrix::zeros(0, 0); depth];
        let mut upstream = grad_logits.clone();
        for l in (0..depth).rev() {
            let entry = &tape.entries[l];
            let (grad_in, grad_w) = backward_inner(graph, &entry.cache, &upstream, l > 0)?;
            effective[l] = grad_w;
            if let Some(mut g) = grad_in {
                if let Some(mask) = &entry.dropout_mask {
                    g = g.hadamard(mask)?;
                }
                upstream = g;
            }
        }

        let mut weights = Vec::with_capacity(depth);
        let mut scales = vec![0.0; depth];
        for (l, entry) in tape.entries.iter().enumerate() {
            let s = entry.forward_scale;
            let mut grad_w = if s == 1.0 { effective[l].clone() } else { effective[l].scale(s) };
            if s != 1.0 && s > 0.0 {
                scales[l] += effective[l].frobenius_dot(&entry.transform.weight)? / (2.0 * s);
            }
            if let Some(k) = tape.regularized.iter().position(|&r| r == l) {
                grad_w.add_scaled_assign(1.0, &tape.regularizer.grads_w[k])?;
                scales[l] += tape.regularizer.grads_c[k];
            }
            weights.push(entry.transform.backward(&self.layers[l].raw_weight, &grad_w)?);
        }

        let aux_loss = tape.regularizer.loss;
        self.last_grad_norms = Some(effective.iter().map(DenseMatrix::frobenius_norm).collect());
        Ok(Gradients {
            weights,
            scales,
            effective,
            aux_loss,
        })
    }

    /// Per-layer `‖∂L_task/∂W^(l)‖_F` from the most recent backward pass.
    pub fn gradient_norms(&self) -> Result<Vec<f64>> {
        self.last_grad_norms
            .clone()
            .ok_or_else(|| Error::contract("gradient_norms", "no backward pass since the last forward"))
    }

    /// Task + auxiliary loss and gradients on `mask`, in one forward/backward.
    pub fn loss_and_gradients(&mut self, dataset: &NodeDataset, mask: &[usize], train_mode: bool) -> Result<(f64, f64, Gradients)> {
        let logits = self.forward(dataset, train_mode)?;
        let (task, grad_logits) = masked_cross_entropy(&logits, &dataset.labels, mask)?;
        let grads = self.backward(&dataset.graph, &grad_logits)?;
        Ok((task, grads.aux_loss, grads))
    }

    /// Eval-mode `task + auxiliary` loss; used by gradient checks.
    pub fn total_loss(&mut self, dataset: &NodeDataset, mask: &[usize]) -> Result<f64> {
        let logits = self.forward(dataset, false)?;
        let (task, _) = masked_cross_entropy(&logits, &dataset.labels, mask)?;
        Ok(task + self.aux_loss().unwrap_or(0.0))
    }

    pub(crate) fn clear_tape(&mut self) {
        self.tape = None;
    }

    pub(crate) fn params_and_optimizer(&mut self) -> (&mut [OrthoLayerParams], &mut AdamState) {
        (&mut self.layers, &mut self.optimizer)
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.optimizer
    }
}

pub fn model_forward(state: &mut ModelState, dataset: &NodeDataset, train_mode: bool) -> Result<DenseMatrix> {
    state.forward(dataset, train_mode)
}

//! Run configuration: JSON file values overlaid by command-line flags. The
//! merged result is what every output echoes.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use ortho_gconv::engine::Activation;
use ortho_gconv::graph::synthetic::SbmConfig;
use ortho_gconv::ortho::{OrthoConfig, Penalty};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::seeds::{default_seed, parse_seeds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// `cora.content` + `cora.cites` under `data_dir`.
    Cora,
    /// Synthetic stochastic block model.
    Sbm,
    /// Whitespace edge list, CSV features and a label file.
    Files,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub dataset: DatasetKind,
    pub data_dir: PathBuf,
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// JSON splits; generated with `split_seed` when absent.
    pub splits: Option<PathBuf>,
    pub split_seed: u64,
    pub train_per_class: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// L1-normalize feature rows (standard for citation data).
    pub row_normalize: bool,
    pub sbm: SbmConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Sbm,
            data_dir: PathBuf::from("data/cora"),
            edges: None,
            features: None,
            labels: None,
            splits: None,
            split_seed: 0,
            train_per_class: 20,
            val_size: 500,
            test_size: 1000,
            row_normalize: true,
            sbm: SbmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Dataset source.
    #[arg(long, value_enum)]
    pub dataset: Option<DatasetKind>,
    /// Directory holding cora.content and cora.cites.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Edge list file (dataset = files).
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Feature matrix CSV (dataset = files).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// One integer label per line (dataset = files).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Split JSON with train/val/test index lists.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Keep raw feature rows instead of L1-normalizing them.
    #[arg(long)]
    pub raw_features: bool,
    /// Node count of the synthetic graph.
    #[arg(long)]
    pub sbm_nodes: Option<usize>,
}

impl DataArgs {
    pub fn apply(&self, cfg: &mut DataConfig) {
        set(&mut cfg.dataset, self.dataset);
        set(&mut cfg.data_dir, self.data_dir.clone());
        set_opt(&mut cfg.edges, self.edges.clone());
        set_opt(&mut cfg.features, self.features.clone());
        set_opt(&mut cfg.labels, self.labels.clone());
        set_opt(&mut cfg.splits, self.splits.clone());
        set(&mut cfg.split_seed, self.split_seed);
        if self.raw_features {
            cfg.row_normalize = false;
        }
        set(&mut cfg.sbm.nodes, self.sbm_nodes);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub layers: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden: 16,
            activation: Activation::Relu,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.0,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, value_enum)]
    pub activation: Option<ActivationArg>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Orthogonal graph convolution on hidden layers.
    #[arg(long, value_enum)]
    pub ortho: Option<Switch>,
    /// Newton iterations.
    #[arg(long = "T")]
    pub iterations: Option<usize>,
    /// Hybrid-initialization blend.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Orthogonal regularizer weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Regularizer exponent (1 or 2).
    #[arg(long)]
    pub penalty: Option<u8>,
    /// Experimental: scale orthogonal weights by sqrt(c) in the forward pass.
    #[arg(long)]
    pub scale_forward: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    Relu,
    Identity,
}

impl ModelArgs {
    pub fn apply(&self, model: &mut ModelSettings, ortho: &mut OrthoConfig) -> Result<()> {
        set(&mut model.layers, self.layers);
        set(&mut model.hidden, self.hidden);
        set(
            &mut model.activation,
            self.activation.map(|a| match a {
                ActivationArg::Relu => Activation::Relu,
                ActivationArg::Identity => Activation::Identity,
            }),
        );
        set(&mut model.learning_rate, self.learning_rate);
        set(&mut model.weight_decay, self.weight_decay);
        set(&mut model.dropout, self.dropout);
        set(&mut model.epochs, self.epochs);
        match self.ortho {
            Some(Switch::On) => ortho.enabled = true,
            Some(Switch::Off) => {
                let vanilla = OrthoConfig::vanilla();
                ortho.enabled = false;
                // Vanilla GCN means Glorot weights and no regularizer unless asked.
                if self.beta.is_none() {
                    ortho.beta = vanilla.beta;
                }
                if self.lambda.is_none() {
                    ortho.lambda = vanilla.lambda;
                }
            }
            None => {}
        }
        set(&mut ortho.iterations, self.iterations);
        set(&mut ortho.beta, self.beta);
        set(&mut ortho.lambda, self.lambda);
        if let Some(p) = self.penalty {
            ortho.penalty = Penalty::try_from(p).map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        if self.scale_forward {
            ortho.scale_forward = true;
        }
        ortho.validate()?;
        if !(0.0..1.0).contains(&model.dropout) {
            bail!("dropout {} outside [0, 1)", model.dropout);
        }
        Ok(())
    }
}

/// Seeds from flags, then the config file, then `ORTHO_GCONV_SEED`.
pub fn resolve_seeds(flag: Option<&str>, from_config: &[u64]) -> Result<Vec<u64>> {
    if let Some(spec) = flag {
        return parse_seeds(spec);
    }
    if !from_config.is_empty() {
        return Ok(from_config.to_vec());
    }
    Ok(vec![default_seed()?])
}

pub fn load_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let mut model: ModelSettings = serde_json::from_str(r#"{"layers": 4, "hidden": 32}"#).unwrap();
        let mut ortho = OrthoConfig::default();
        let args = ModelArgs {
            layers: Some(8),
            iterations: Some(2),
            ..Default::default()
        };
        args.apply(&mut model, &mut ortho).unwrap();
        assert_eq!((model.layers, model.hidden), (8, 32));
        assert_eq!(ortho.iterations, 2);
    }

    #[test]
    fn ortho_off_means_vanilla() {
        let mut model = ModelSettings::default();
        let mut ortho = OrthoConfig::default();
        let args = ModelArgs {
            ortho: Some(Switch::Off),
            ..Default::default()
        };
        args.apply(&mut model, &mut ortho).unwrap();
        assert_eq!(ortho, OrthoConfig::vanilla());
    }

    #[test]
    fn invalid_values_rejected() {
        let bad_beta = ModelArgs {
            beta: Some(1.5),
            ..Default::default()
        };
        assert!(bad_beta.apply(&mut ModelSettings::default(), &mut OrthoConfig::default()).is_err());
        let bad_penalty = ModelArgs {
            penalty: Some(3),
            ..Default::default()
        };
        assert!(bad_penalty.apply(&mut ModelSettings::default(), &mut OrthoConfig::default()).is_err());
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seeds(Some("2..3"), &[9]).unwrap(), vec![2, 3]);
        assert_eq!(resolve_seeds(None, &[9]).unwrap(), vec![9]);
    }
}

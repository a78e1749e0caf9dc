use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use ortho_gconv::engine::{train_with, EpochMetrics, ModelConfig, TrainOptions};
use ortho_gconv::graph::NodeDataset;
use ortho_gconv::ortho::OrthoConfig;
use serde::{Deserialize, Serialize};

use crate::config::{load_json, resolve_seeds, DataArgs, DataConfig, ModelArgs, ModelSettings};
use crate::data::load_dataset;
use crate::pool::run_indexed;
use crate::stats::mean_std;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub data: DataConfig,
    pub model: ModelSettings,
    pub ortho: OrthoConfig,
    pub seeds: Vec<u64>,
    pub steadiness_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Seeds as `a..b` (inclusive), a list, or a single value.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Record M_sig and smoothness every this many epochs.
    #[arg(long)]
    pub steadiness_every: Option<usize>,
    /// Output directory for metrics and the summary.
    #[arg(long, default_value = "runs/train")]
    pub out: PathBuf,
    /// Seeds trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Serialize)]
struct SeedResult {
    seed: u64,
    best_epoch: Option<usize>,
    best_val_acc: Option<f64>,
    test_acc_at_best: Option<f64>,
    final_train_loss: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a TrainConfig,
    runs: Vec<SeedResult>,
    test_acc_mean: Option<f64>,
    test_acc_std: Option<f64>,
    val_acc_mean: Option<f64>,
}

#[derive(Serialize)]
struct Header<'a> {
    config: &'a TrainConfig,
    seed: u64,
}

#[derive(Serialize)]
struct MetricLine<'a> {
    seed: u64,
    #[serde(flatten)]
    metrics: &'a EpochMetrics,
}

pub fn merged_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = load_json(args.config.as_deref())?;
    args.data.apply(&mut cfg.data);
    args.model.apply(&mut cfg.model, &mut cfg.ortho)?;
    cfg.seeds = resolve_seeds(args.seeds.as_deref(), &cfg.seeds)?;
    if args.steadiness_every.is_some() {
        cfg.steadiness_every = args.steadiness_every;
    }
    Ok(cfg)
}

pub fn model_config(cfg: &TrainConfig, dataset: &NodeDataset, seed: u64) -> ModelConfig {
    let m = &cfg.model;
    let mut model = ModelConfig::new(dataset.num_features(), m.hidden, dataset.num_classes, m.layers).with_ortho(cfg.ortho.clone());
    model.activation = m.activation;
    model.learning_rate = m.learning_rate;
    model.weight_decay = m.weight_decay;
    model.dropout = m.dropout;
    model.epochs = m.epochs;
    model.seed = seed;
    model
}

pub fn run(args: TrainArgs) -> Result<()> {
    let cfg = merged_config(&args)?;
    let dataset = load_dataset(&cfg.data)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let options = TrainOptions {
        steadiness_every: cfg.steadiness_every,
    };

    let results = run_indexed(args.workers, &cfg.seeds, |&seed| -> Result<SeedResult> {
        let outcome = train_with(model_config(&cfg, &dataset, seed), &dataset, &options)
            .with_context(|| format!("training seed {seed}"))?;
        write_metrics(&args.out.join(format!("metrics_seed{seed}.jsonl")), &cfg, seed, &outcome.history)?;
        Ok(SeedResult {
            seed,
            best_epoch: outcome.best_epoch,
            best_val_acc: outcome.best_val_acc,
            test_acc_at_best: outcome.test_acc_at_best,
            final_train_loss: outcome.history.last().map(|m| m.train_loss),
        })
    })?;
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let tests: Vec<f64> = runs.iter().filter_map(|r| r.test_acc_at_best).collect();
    let vals: Vec<f64> = runs.iter().filter_map(|r| r.best_val_acc).collect();
    let (test_acc_mean, test_acc_std) = mean_std(&tests).unzip();
    let summary = Summary {
        config: &cfg,
        runs,
        test_acc_mean,
        test_acc_std,
        val_acc_mean: mean_std(&vals).map(|s| s.0),
    };
    let path = args.out.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n").with_context(|| format!("writing {}", path.display()))?;

    match (test_acc_mean, test_acc_std) {
        (Some(m), Some(s)) => println!("test accuracy over {} seed(s): {:.2} ± {:.2}", tests.len(), 100.0 * m, 100.0 * s),
        _ => println!("no test split; summary written to {}", path.display()),
    }
    Ok(())
}

fn write_metrics(path: &Path, cfg: &TrainConfig, seed: u64, history: &[EpochMetrics]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &Header { config: cfg, seed })?;
    writeln!(w)?;
    for metrics in history {
        serde_json::to_writer(&mut w, &MetricLine { seed, metrics })?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

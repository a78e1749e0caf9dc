use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use ortho_gconv::diagnostics::{run_cell, SweepCell, SweepConfig, Variant};
use ortho_gconv::ortho::OrthoConfig;
use serde::{Deserialize, Serialize};

use crate::config::{load_json, resolve_seeds, DataArgs, DataConfig, ModelArgs, ModelSettings};
use crate::data::load_dataset;
use crate::pool::run_indexed;
use crate::seeds::parse_list;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub data: DataConfig,
    pub model: ModelSettings,
    pub ortho: OrthoConfig,
    pub depths: Vec<usize>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            model: ModelSettings::default(),
            ortho: OrthoConfig::default(),
            depths: vec![2, 4, 8, 16],
            variants: Variant::ALL.to_vec(),
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated model depths.
    #[arg(long)]
    pub depths: Option<String>,
    /// Comma-separated subset of vanilla, ortho, aggregation_only.
    #[arg(long)]
    pub variants: Option<String>,
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long, default_value = "runs/probe")]
    pub out: PathBuf,
    /// Cells evaluated concurrently.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Serialize)]
struct Header<'a> {
    config: &'a ProbeConfig,
}

#[derive(Serialize)]
struct CellLine<'a> {
    #[serde(flatten)]
    cell: &'a SweepCell,
    config: &'a SweepConfig,
}

pub fn merged_config(args: &ProbeArgs) -> Result<ProbeConfig> {
    let mut cfg: ProbeConfig = load_json(args.config.as_deref())?;
    if args.model.layers.is_some() {
        bail!("probe takes --depths, not --layers");
    }
    args.data.apply(&mut cfg.data);
    args.model.apply(&mut cfg.model, &mut cfg.ortho)?;
    if let Some(d) = &args.depths {
        cfg.depths = parse_list(d, "depth")?;
    }
    if let Some(v) = &args.variants {
        cfg.variants = parse_list(v, "variant")?;
    }
    if cfg.depths.is_empty() || cfg.depths.contains(&0) {
        bail!("depths must be a non-empty list of positive integers");
    }
    if cfg.variants.is_empty() {
        bail!("no variants selected");
    }
    cfg.seeds = resolve_seeds(args.seeds.as_deref(), &cfg.seeds)?;
    Ok(cfg)
}

fn sweep_config(cfg: &ProbeConfig, seed: u64) -> SweepConfig {
    SweepConfig {
        hidden_dim: cfg.model.hidden,
        learning_rate: cfg.model.learning_rate,
        weight_decay: cfg.model.weight_decay,
        dropout: cfg.model.dropout,
        epochs: cfg.model.epochs,
        seed,
        ortho: cfg.ortho.clone(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(args: ProbeArgs) -> Result<()> {
    let cfg = merged_config(&args)?;
    let dataset = load_dataset(&cfg.data)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut jobs = Vec::new();
    for &seed in &cfg.seeds {
        for &depth in &cfg.depths {
            for &variant in &cfg.variants {
                jobs.push((seed, depth, variant));
            }
        }
    }
    let cells = run_indexed(args.workers, &jobs, |&(seed, depth, variant)| {
        let sweep = sweep_config(&cfg, seed);
        let cell = run_cell(&dataset, depth, variant, &sweep);
        (cell, sweep)
    })?;

    let mut csv = String::from("depth,variant,seed,accuracy,msig,smoothness\n");
    let mut jsonl = serde_json::to_string(&Header { config: &cfg })? + "\n";
    let mut failures = 0;
    for (cell, sweep) in &cells {
        writeln!(csv, "{},{},{},{},{},{}", cell.depth, cell.variant, cell.seed, opt(cell.accuracy), opt(cell.msig), opt(cell.smoothness))?;
        jsonl += &serde_json::to_string(&CellLine { cell, config: sweep })?;
        jsonl.push('\n');
        if let Some(e) = &cell.error {
            failures += 1;
            eprintln!("cell depth={} variant={} seed={} failed: {e}", cell.depth, cell.variant, cell.seed);
        }
    }
    let write = |name: &str, body: &str| -> Result<()> {
        let path = args.out.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write("probe.csv", &csv)?;
    write("cells.jsonl", &jsonl)?;
    write("probe.config.json", &(serde_json::to_string_pretty(&cfg)? + "\n"))?;
    print!("{csv}");
    if failures > 0 {
        eprintln!("{failures} cell(s) failed; see cells.jsonl");
    }
    Ok(())
}

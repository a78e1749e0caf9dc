use anyhow::{bail, Context, Result};
use log::{info, warn};
use ortho_gconv::graph::synthetic::{sbm_dataset, SbmConfig};
use ortho_gconv::graph::{load_cora_format, load_edge_list, load_labels, load_splits, normalize_adjacency, planetoid_split, NodeDataset, Splits};

use crate::config::{DataConfig, DatasetKind};
use crate::matrix_io::read_csv_matrix;

pub fn load_dataset(cfg: &DataConfig) -> Result<NodeDataset> {
    let mut dataset = match cfg.dataset {
        DatasetKind::Sbm => return Ok(sbm_dataset(&fit_sbm_split(&cfg.sbm))?),
        DatasetKind::Cora => {
            let content = cfg.data_dir.join("cora.content");
            let cites = cfg.data_dir.join("cora.cites");
            for p in [&content, &cites] {
                if !p.exists() {
                    bail!("dataset file {} not found", p.display());
                }
            }
            let load = load_cora_format(&content, &cites)?;
            if load.dropped_citations > 0 {
                info!("dropped {} citations with unknown ids", load.dropped_citations);
            }
            load.dataset
        }
        DatasetKind::Files => {
            let (Some(edges), Some(features), Some(labels)) = (&cfg.edges, &cfg.features, &cfg.labels) else {
                bail!("dataset 'files' needs --edges, --features and --labels");
            };
            let x = read_csv_matrix(features)?;
            let labels = load_labels(labels)?;
            let mut edge_list = load_edge_list(edges)?;
            if edge_list.num_nodes < x.rows() {
                edge_list.num_nodes = x.rows();
            }
            let graph = normalize_adjacency(&edge_list).with_context(|| format!("building graph from {}", edges.display()))?;
            let num_classes = labels.iter().max().map_or(0, |m| m + 1);
            NodeDataset::new(graph, x, labels, num_classes, Splits::default())?
        }
    };
    if cfg.row_normalize {
        dataset.row_normalize_features();
    }
    let splits = match &cfg.splits {
        Some(path) => load_splits(path, dataset.num_nodes())?,
        None => default_splits(&dataset, cfg)?,
    };
    Ok(dataset.with_splits(splits)?)
}

/// Shrinks validation and test so a smaller `--sbm-nodes` still has a valid split.
fn fit_sbm_split(sbm: &SbmConfig) -> SbmConfig {
    let mut cfg = sbm.clone();
    let rest = cfg.nodes.saturating_sub(cfg.classes * cfg.train_per_class);
    if cfg.val + cfg.test > rest {
        cfg.val = rest / 3;
        cfg.test = rest - cfg.val;
        warn!("graph too small for {} val + {} test nodes; using {} + {}", sbm.val, sbm.test, cfg.val, cfg.test);
    }
    cfg
}

/// Planetoid-style split; validation and test shrink to fit small graphs.
fn default_splits(dataset: &NodeDataset, cfg: &DataConfig) -> Result<Splits> {
    let n = dataset.num_nodes();
    let train_count = (0..dataset.num_classes)
        .map(|c| dataset.labels.iter().filter(|&&l| l == c).count().min(cfg.train_per_class))
        .sum::<usize>();
    let rest = n - train_count;
    let (mut val, mut test) = (cfg.val_size, cfg.test_size);
    if val + test > rest {
        val = rest / 3;
        test = rest - val;
        warn!("graph too small for {} val + {} test nodes; using {val} + {test}", cfg.val_size, cfg.test_size);
    }
    Ok(planetoid_split(&dataset.labels, dataset.num_classes, cfg.train_per_class, val, test, cfg.split_seed)?)
}

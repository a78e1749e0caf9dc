//! Text formats: edge lists, the Cora content/cites pair, and JSON splits.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{normalize_adjacency, EdgeList, NodeDataset, Splits};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads `src<TAB>dst` pairs (any whitespace separates). `#` lines are
/// comments; a `# n=<count>` comment declares the node count, otherwise it is
/// one past the largest id.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<EdgeList> {
    let path = path.as_ref();
    parse_edge_list(&read(path)?, path)
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<EdgeList> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("n=") {
                let n = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| parse_error(path, lineno, format!("bad node count: {e}")))?;
                declared = Some(n);
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(path, lineno, format!("expected two node ids, got {line:?}")));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| parse_error(path, lineno, format!("bad node id {s:?}: {e}")))
        };
        edges.push((parse(a)?, parse(b)?));
    }
    let inferred = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    Ok(EdgeList::new(declared.unwrap_or(inferred), edges))
}

/// Dataset parsed from the content/cites pair plus what was dropped.
#[derive(Debug, Clone)]
pub struct CoraLoad {
    pub dataset: NodeDataset,
    /// Citation lines naming an id absent from the content file.
    pub dropped_citations: usize,
    /// String id of each node, in index order.
    pub node_ids: Vec<String>,
}

/// Parses `paper_id<TAB>f_1 … f_d<TAB>label` rows and `cited<TAB>citing`
/// rows. Ids and labels become dense indices in first-appearance order. The
/// returned dataset carries empty splits.
pub fn load_cora_format(content_path: impl AsRef<Path>, cites_path: impl AsRef<Path>) -> Result<CoraLoad> {
    let content_path = content_path.as_ref();
    let cites_path = cites_path.as_ref();

    let mut node_ids = Vec::new();
    let mut index_of = HashMap::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut features = Vec::new();
    let mut width = None;

    for (lineno, line) in read(content_path)?.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(parse_error(content_path, lineno, "expected id, features and label"));
        }
        let d = fields.len() - 2;
        match width {
            None => width = Some(d),
            Some(w) if w != d => {
                return Err(parse_error(content_path, lineno, format!("{d} features, expected {w}")));
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if index_of.insert(id.clone(), node_ids.len()).is_some() {
            return Err(parse_error(content_path, lineno, format!("duplicate paper id {id}")));
        }
        node_ids.push(id);
        for f in &fields[1..=d] {
            features.push(
                f.parse::<f64>()
                    .map_err(|e| parse_error(content_path, lineno, format!("bad feature {f:?}: {e}")))?,
            );
        }
        let label = fields[d + 1];
        let class = *label_index.entry(label.to_string()).or_insert_with(|| {
            label_names.push(label.to_string());
            label_names.len() - 1
        });
        labels.push(class);
    }

    let n = node_ids.len();
    let mut dropped = 0;
    let mut edges = Vec::new();
    for (lineno, line) in read(cites_path)?.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(cited), Some(citing), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(cites_path, lineno, format!("expected two paper ids, got {line:?}")));
        };
        match (index_of.get(cited), index_of.get(citing)) {
            (Some(&a), Some(&b)) => edges.push((a, b)),
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::info!("dropped {dropped} citations with unknown paper ids");
    }

    let graph = normalize_adjacency(&EdgeList::new(n, edges))?;
    let features = DenseMatrix::new(n, width.unwrap_or(0), features)?;
    let num_classes = label_names.len();
    let mut dataset = NodeDataset::new(graph, features, labels, num_classes, Splits::default())?;
    dataset.label_names = label_names;
    Ok(CoraLoad {
        dataset,
        dropped_citations: dropped,
        node_ids,
    })
}

/// Reads `{"train": [...], "val": [...], "test": [...]}` and validates it
/// against `n` nodes.
pub fn load_splits(path: impl AsRef<Path>, n: usize) -> Result<Splits> {
    let path = path.as_ref();
    let splits: Splits =
        serde_json::from_str(&read(path)?).map_err(|e| parse_error(path, e.line(), e.to_string()))?;
    splits.validate(n)?;
    Ok(splits)
}

/// One non-negative integer class label per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|e| parse_error(path, i + 1, format!("bad label: {e}")))
        })
        .collect()
}

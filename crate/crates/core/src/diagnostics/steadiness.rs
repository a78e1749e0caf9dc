use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{masked_cross_entropy, ModelState};
use crate::error::{Error, Result};
use crate::graph::NodeDataset;
use crate::linalg::{dot, DenseMatrix};

/// Above this many nodes smoothness switches to pair sampling.
pub const SMOOTHNESS_EXACT_LIMIT: usize = 2000;
pub const SMOOTHNESS_SAMPLES: usize = 1_000_000;
const SMOOTHNESS_SEED: u64 = 0x5EED_D15C;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Magnification {
    pub value: f64,
    /// Rows of the input with zero norm, left out of the average.
    pub excluded_rows: usize,
}

/// Mean over nodes of `‖h_i^(L)‖ / ‖h_i^(0)‖`.
pub fn signal_magnification(h0: &DenseMatrix, hl: &DenseMatrix) -> Result<Magnification> {
    if h0.rows() != hl.rows() {
        return Err(Error::shape("signal_magnification", format!("{} rows", h0.rows()), hl.rows()));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for i in 0..h0.rows() {
        let base = dot(h0.row(i), h0.row(i)).sqrt();
        if base == 0.0 {
            continue;
        }
        sum += dot(hl.row(i), hl.row(i)).sqrt() / base;
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateInput("every input row has zero norm".into()));
    }
    Ok(Magnification {
        value: sum / used as f64,
        excluded_rows: h0.rows() - used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub value: f64,
    /// True when the value is a sampled estimate rather than the exact sum.
    pub sampled: bool,
}

fn row_distance(h: &DenseMatrix, i: usize, j: usize) -> f64 {
    h.row(i)
        .iter()
        .zip(h.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Average distance over all ordered node pairs, `(1/n²) Σ_i Σ_j ‖h_i − h_j‖`.
///
/// Exact up to [`SMOOTHNESS_EXACT_LIMIT`] nodes; beyond that an unbiased
/// estimate from [`SMOOTHNESS_SAMPLES`] uniformly drawn ordered pairs.
pub fn graph_smoothness(h: &DenseMatrix) -> Smoothness {
    let n = h.rows();
    if n == 0 {
        return Smoothness { value: 0.0, sampled: false };
    }
    if n <= SMOOTHNESS_EXACT_LIMIT {
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                total += row_distance(h, i, j);
            }
        }
        return Smoothness {
            value: 2.0 * total / (n * n) as f64,
            sampled: false,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SMOOTHNESS_SEED);
    let mut total = 0.0;
    for _ in 0..SMOOTHNESS_SAMPLES {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        total += row_distance(h, i, j);
    }
    Smoothness {
        value: total / SMOOTHNESS_SAMPLES as f64,
        sampled: true,
    }
}

/// Per-layer task-gradient norms recorded by the last backward pass.
pub fn gradient_norms(state: &ModelState) -> Result<Vec<f64>> {
    state.gradient_norms()
}

/// Forward and backward steadiness measurements at one point of training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadinessReport {
    pub depth: usize,
    pub epoch: usize,
    pub signal_magnification: f64,
    pub excluded_rows: usize,
    pub grad_norms: Vec<f64>,
    pub smoothness: f64,
    pub smoothness_sampled: bool,
}

impl SteadinessReport {
    pub fn is_valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        ok(self.signal_magnification) && ok(self.smoothness) && self.grad_norms.iter().all(|&g| ok(g))
    }
}

/// Measures the model as it stands: an eval-mode forward for `M_sig` and
/// `D`, then the training-split gradient for the per-layer norms.
pub fn steadiness_report(state: &mut ModelState, dataset: &NodeDataset, epoch: usize) -> Result<SteadinessReport> {
    let logits = state.forward(dataset, false)?;
    let mag = signal_magnification(&dataset.features, &logits)?;
    let smooth = graph_smoothness(&logits);
    let (_, grad_logits) = masked_cross_entropy(&logits, &dataset.labels, &dataset.splits.train)?;
    state.backward(&dataset.graph, &grad_logits)?;
    let grad_norms = state.gradient_norms()?;
    Ok(SteadinessReport {
        depth: state.num_layers(),
        epoch,
        signal_magnification: mag.value,
        excluded_rows: mag.excluded_rows,
        grad_norms,
        smoothness: smooth.value,
        smoothness_sampled: smooth.sampled,
    })
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::orthogonal::householder_product;
use crate::linalg::random::gaussian;
use crate::linalg::DenseMatrix;

/// Closed-form gradient of a linear GCN (identity activations) with respect
/// to the `l`-th weight (1-based):
///
/// `∂L/∂W^(l) = (H^(l−1))ᵀ (Âᵀ)^(L−l+1) G (W^(l+1) ⋯ W^(L))ᵀ`
///
/// where `G = ∂L/∂H^(L)` and `H^(k) = Â H^(k−1) W^(k)`.
pub fn theorem1_gradient(graph: &Graph, x: &DenseMatrix, weights: &[DenseMatrix], upstream: &DenseMatrix, l: usize) -> Result<DenseMatrix> {
    let depth = weights.len();
    if l == 0 || l > depth {
        return Err(Error::contract("theorem1_gradient", format!("layer index {l} outside 1..={depth}")));
    }
    let mut h = x.clone();
    for w in &weights[..l - 1] {
        h = graph.spmm(&h)?.matmul(w)?;
    }
    // Â is symmetric, so powers of Âᵀ are powers of Â.
    let propagated = graph.propagate(upstream, depth - l + 1)?;
    let mut tail: Option<DenseMatrix> = None;
    for w in &weights[l..] {
        tail = Some(match tail {
            None => w.clone(),
            Some(t) => t.matmul(w)?,
        });
    }
    let core = h.t_matmul(&propagated)?;
    match tail {
        None => Ok(core),
        Some(t) => core.matmul_t(&t),
    }
}

/// Measured deviations and verdicts for the orthogonal-weight properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub d: usize,
    pub samples: usize,
    pub sigma: f64,
    /// Largest `|mean_j|` of the transformed samples.
    pub mean_deviation: f64,
    pub mean_tolerance: f64,
    /// Largest entrywise gap between the sample covariance and `σ²I`.
    pub covariance_deviation: f64,
    pub covariance_tolerance: f64,
    /// `|‖ĤW‖_F − ‖Ĥ‖_F|`
    pub norm_deviation: f64,
    /// `|‖G Wᵀ‖_F − ‖G‖_F|`
    pub gradient_norm_deviation: f64,
    pub norm_tolerance: f64,
}

impl Theorem2Report {
    pub fn mean_ok(&self) -> bool {
        self.mean_deviation <= self.mean_tolerance
    }

    pub fn covariance_ok(&self) -> bool {
        self.covariance_deviation <= self.covariance_tolerance
    }

    pub fn norm_ok(&self) -> bool {
        self.norm_deviation <= self.norm_tolerance
    }

    pub fn gradient_norm_ok(&self) -> bool {
        self.gradient_norm_deviation <= self.norm_tolerance
    }

    pub fn passed(&self) -> bool {
        self.mean_ok() && self.covariance_ok() && self.norm_ok() && self.gradient_norm_ok()
    }
}

pub const THEOREM2_NORM_TOL: f64 = 1e-10;
pub const THEOREM2_COV_FACTOR: f64 = 0.05;
pub const THEOREM2_MEAN_SIGMAS: f64 = 4.0;

/// Runs the checks with a random Householder-product weight.
pub fn theorem2_check(d: usize, num_samples: usize, sigma: f64, seed: u64) -> Result<Theorem2Report> {
    if d < 2 {
        return Err(Error::contract("theorem2_check", format!("d = {d}; need d ≥ 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = householder_product(d, &mut rng);
    theorem2_check_with(&w, num_samples, sigma, seed.wrapping_add(1))
}

/// Draws `num_samples` whitened rows `ĥ ~ N(0, σ²I)`, transforms them by
/// `w`, and compares moments and norms against the orthogonal predictions.
pub fn theorem2_check_with(w: &DenseMatrix, num_samples: usize, sigma: f64, seed: u64) -> Result<Theorem2Report> {
    let d = w.rows();
    if !w.is_square() {
        return Err(Error::shape("theorem2_check_with", "square weight", format!("{}x{}", w.rows(), w.cols())));
    }
    if num_samples < 2 {
        return Err(Error::contract("theorem2_check_with", "need at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_hat = gaussian(num_samples, d, sigma, &mut rng);
    let h = h_hat.matmul(w)?;

    let n = num_samples as f64;
    let mut mean = vec![0.0; d];
    for i in 0..num_samples {
        for (m, v) in mean.iter_mut().zip(h.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mean_deviation = mean.iter().fold(0.0f64, |acc, m| acc.max(m.abs()));

    let centered = DenseMatrix::from_fn(num_samples, d, |i, j| h[(i, j)] - mean[j]);
    let cov = centered.t_matmul(&centered)?.scale(1.0 / (n - 1.0));
    let target = DenseMatrix::identity(d).scale(sigma * sigma);
    let covariance_deviation = cov.max_abs_diff(&target)?;

    let norm_deviation = (h.frobenius_norm() - h_hat.frobenius_norm()).abs();
    let upstream = gaussian(num_samples, d, 1.0, &mut rng);
    let back = upstream.matmul_t(w)?;
    let gradient_norm_deviation = (back.frobenius_norm() - upstream.frobenius_norm()).abs();

    Ok(Theorem2Report {
        d,
        samples: num_samples,
        sigma,
        mean_deviation,
        mean_tolerance: THEOREM2_MEAN_SIGMAS * sigma / n.sqrt(),
        covariance_deviation,
        covariance_tolerance: THEOREM2_COV_FACTOR * sigma * sigma,
        norm_deviation,
        gradient_norm_deviation,
        norm_tolerance: THEOREM2_NORM_TOL,
    })
}

//! Spectral bounding and Newton's iteration for `M^{-1/2}`, plus the exact
//! reverse-mode derivative of the composed map `Q ↦ B_T(Q̂)·Q̂`.

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_estimate, DenseMatrix};

use super::{OrthoConfig, OrthoLayerParams};

const RANK_WARN_THRESHOLD: f64 = 1e-10;
const RANK_PROBE_ITERS: usize = 100;

/// `Q / ‖Q‖_F`
pub fn spectral_bound(q: &DenseMatrix) -> Result<DenseMatrix> {
    let norm = q.frobenius_norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateWeight);
    }
    Ok(q.scale(1.0 / norm))
}

/// Pulls a gradient with respect to `Q̂ = Q/‖Q‖_F` back to `Q`.
pub fn spectral_bound_backward(q: &DenseMatrix, grad_q_hat: &DenseMatrix) -> Result<DenseMatrix> {
    let norm = q.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::DegenerateWeight);
    }
    let q_hat = q.scale(1.0 / norm);
    let radial = grad_q_hat.frobenius_dot(&q_hat)?;
    let mut g = grad_q_hat.clone();
    g.add_scaled_assign(-radial, &q_hat)?;
    Ok(g.scale(1.0 / norm))
}

#[derive(Debug, Clone)]
pub struct NewtonOutput {
    /// `W = B_T · Q̂`
    pub weight: DenseMatrix,
    /// `‖B_t² M − I‖_F` for `t = 1..=T`.
    pub residuals: Vec<f64>,
}

/// One step `B ← ½(3B − B³M)`.
fn newton_step(b: &DenseMatrix, m: &DenseMatrix) -> Result<DenseMatrix> {
    let b2 = b.matmul(b)?;
    let b3m = b2.matmul(b)?.matmul(m)?;
    let mut next = b.scale(1.5);
    next.add_scaled_assign(-0.5, &b3m)?;
    Ok(next)
}

/// Runs `iterations` Newton steps toward `M^{-1/2}` with `M = Q̂Q̂ᵀ` and
/// returns `B_T·Q̂` with the residual trace.
///
/// Expects a unit-Frobenius input so the spectrum of `M` lies in `[0, 1]`.
/// A rank-deficient `Q̂` is processed unchanged: its null directions are
/// annihilated by the final product.
pub fn newton_orthogonalize(q_hat: &DenseMatrix, iterations: usize) -> Result<NewtonOutput> {
    let m = q_hat.matmul_t(q_hat)?;
    let mut b = DenseMatrix::identity(m.rows());
    let mut residuals = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        b = newton_step(&b, &m)?;
        let b2m = b.matmul(&b)?.matmul(&m)?;
        residuals.push(b2m.add_diagonal(-1.0).frobenius_norm());
    }
    Ok(NewtonOutput {
        weight: b.matmul(q_hat)?,
        residuals,
    })
}

/// Reverse-mode derivative of `Q̂ ↦ B_T(Q̂Q̂ᵀ)·Q̂`.
///
/// Replays the forward iterations, then walks them backwards accumulating
/// the adjoints of every matrix product.
pub fn newton_orthogonalize_backward(q_hat: &DenseMatrix, iterations: usize, grad_w: &DenseMatrix) -> Result<DenseMatrix> {
    if grad_w.rows() != q_hat.rows() || grad_w.cols() != q_hat.cols() {
        return Err(Error::shape(
            "newton_orthogonalize_backward",
            format!("{}x{}", q_hat.rows(), q_hat.cols()),
            format!("{}x{}", grad_w.rows(), grad_w.cols()),
        ));
    }
    let m = q_hat.matmul_t(q_hat)?;
    let mut history = Vec::with_capacity(iterations + 1);
    history.push(DenseMatrix::identity(m.rows()));
    for t in 0..iterations {
        let next = newton_step(&history[t], &m)?;
        history.push(next);
    }
    let b_final = &history[iterations];

    // W = B_T Q̂
    let mut grad_q_hat = b_final.t_matmul(grad_w)?;
    let mut grad_b = grad_w.matmul_t(q_hat)?;
    let mut grad_m = DenseMatrix::zeros(m.rows(), m.cols());

    for p in history[..iterations].iter().rev() {
        // B_next = 1.5 P − 0.5 P·P·P·M
        let pp = p.matmul(p)?;
        let ppp = pp.matmul(p)?;
        let pm = p.matmul(&m)?;
        let ppm = pp.matmul(&m)?;

        let mut grad_p = grad_b.scale(1.5);
        grad_p.add_scaled_assign(-0.5, &grad_b.matmul_t(&ppm)?)?;
        grad_p.add_scaled_assign(-0.5, &p.t_matmul(&grad_b)?.matmul_t(&pm)?)?;
        grad_p.add_scaled_assign(-0.5, &pp.t_matmul(&grad_b)?.matmul_t(&m)?)?;
        grad_m.add_scaled_assign(-0.5, &ppp.t_matmul(&grad_b)?)?;
        grad_b = grad_p;
    }

    // M = Q̂ Q̂ᵀ
    let sym = grad_m.add(&grad_m.transpose())?;
    grad_q_hat.add_scaled_assign(1.0, &sym.matmul(q_hat)?)?;
    Ok(grad_q_hat)
}

/// Everything the backward pass needs to differentiate one effective weight.
#[derive(Debug, Clone)]
pub struct TransformRecord {
    pub weight: DenseMatrix,
    /// Whether the transformation ran; otherwise `weight` is the raw weight.
    pub applied: bool,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

impl TransformRecord {
    pub fn forward(raw: &DenseMatrix, cfg: &OrthoConfig) -> Result<Self> {
        if !cfg.applies_to(raw) {
            return Ok(Self {
                weight: raw.clone(),
                applied: false,
                iterations: 0,
                residuals: Vec::new(),
            });
        }
        let q_hat = spectral_bound(raw)?;
        warn_if_rank_deficient(&q_hat);
        let out = newton_orthogonalize(&q_hat, cfg.iterations)?;
        Ok(Self {
            weight: out.weight,
            applied: true,
            iterations: cfg.iterations,
            residuals: out.residuals,
        })
    }

    /// Maps `∂L/∂W` to `∂L/∂Q` for the raw weight that produced this record.
    pub fn backward(&self, raw: &DenseMatrix, grad_w: &DenseMatrix) -> Result<DenseMatrix> {
        if !self.applied {
            return Ok(grad_w.clone());
        }
        let q_hat = spectral_bound(raw)?;
        let grad_q_hat = newton_orthogonalize_backward(&q_hat, self.iterations, grad_w)?;
        spectral_bound_backward(raw, &grad_q_hat)
    }
}

/// Spectral bounding then Newton projection for square weights when enabled;
/// otherwise the raw weight unchanged.
pub fn effective_weight(params: &OrthoLayerParams, cfg: &OrthoConfig) -> Result<DenseMatrix> {
    Ok(TransformRecord::forward(&params.raw_weight, cfg)?.weight)
}

fn warn_if_rank_deficient(q_hat: &DenseMatrix) {
    // λ_max(I − M) = 1 − λ_min(M) because spec(M) ⊂ [0, 1].
    let Ok(m) = q_hat.matmul_t(q_hat) else { return };
    let shifted = m.scale(-1.0).add_diagonal(1.0);
    if let Ok(top) = spectral_norm_estimate(&shifted, RANK_PROBE_ITERS, 0) {
        let min_eig = 1.0 - top;
        if min_eig < RANK_WARN_THRESHOLD {
            log::warn!("orthogonal transform input is near rank deficient (min eigenvalue estimate {min_eig:e})");
        }
    }
}

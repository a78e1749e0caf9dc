//! Orthogonal feature transformation: hybrid initialization, Newton
//! orthogonalization with its reverse-mode derivative, and the orthogonal
//! regularizer with a trainable per-layer scale.

mod init;
mod newton;
mod regularizer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub use init::{hybrid_init, hybrid_init_with};
pub use newton::{
    effective_weight, newton_orthogonalize, newton_orthogonalize_backward, spectral_bound, spectral_bound_backward,
    NewtonOutput, TransformRecord,
};
pub use regularizer::{ortho_regularizer, RegularizerOutput};

/// Which power of the Frobenius norm the regularizer penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Penalty {
    /// `‖WWᵀ − cI‖_F`, with subgradient zero at the kink.
    Norm,
    /// `‖WWᵀ − cI‖_F²`
    SquaredNorm,
}

impl Penalty {
    pub fn exponent(self) -> u8 {
        match self {
            Penalty::Norm => 1,
            Penalty::SquaredNorm => 2,
        }
    }
}

impl TryFrom<u8> for Penalty {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Penalty::Norm),
            2 => Ok(Penalty::SquaredNorm),
            other => Err(format!("penalty exponent must be 1 or 2, got {other}")),
        }
    }
}

impl From<Penalty> for u8 {
    fn from(p: Penalty) -> u8 {
        p.exponent()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrthoConfig {
    /// Apply spectral bounding + Newton projection to square layers.
    pub enabled: bool,
    /// Blend weight of the random part in `βP + (1−β)I`.
    pub beta: f64,
    /// Newton iterations T.
    pub iterations: usize,
    /// Regularizer weight λ.
    pub lambda: f64,
    pub penalty: Penalty,
    /// Experimental: multiply orthogonalized weights by `sqrt(c)` in the
    /// forward pass.
    pub scale_forward: bool,
}

impl Default for OrthoConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            beta: 0.4,
            iterations: 4,
            lambda: 1e-4,
            penalty: Penalty::SquaredNorm,
            scale_forward: false,
        }
    }
}

impl OrthoConfig {
    /// Plain GCN: Glorot initialization, no transformation, no regularizer.
    pub fn vanilla() -> Self {
        Self {
            enabled: false,
            beta: 1.0,
            lambda: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::contract("OrthoConfig", format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.enabled && self.iterations == 0 {
            return Err(Error::contract("OrthoConfig", "iterations must be positive"));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::contract("OrthoConfig", format!("lambda {} must be >= 0", self.lambda)));
        }
        Ok(())
    }

    /// Whether a weight of this shape receives the transformation and regularizer.
    pub fn applies_to(&self, weight: &DenseMatrix) -> bool {
        self.enabled && weight.is_square()
    }
}

/// Trainable parameters of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoLayerParams {
    /// Raw weight Q; the effective weight is derived from it.
    pub raw_weight: DenseMatrix,
    /// Regularizer target scale c, starts at 1.
    pub scale: f64,
}

impl OrthoLayerParams {
    pub fn new(raw_weight: DenseMatrix) -> Self {
        Self { raw_weight, scale: 1.0 }
    }

    pub fn effective_weight(&self, cfg: &OrthoConfig) -> Result<DenseMatrix> {
        effective_weight(self, cfg)
    }
}

//! Orthogonal graph convolutions with forward and backward steadiness
//! diagnostics.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense matrices, deterministic products, eigen/inverse-sqrt oracles.
//! - [`graph`]: CSR graphs with symmetric normalization, dataset loaders.
//! - [`ortho`]: hybrid initialization, Newton orthogonalization and its
//!   derivative, the orthogonal regularizer.
//! - [`engine`]: GCN layers, loss, Adam, and the training loop.
//! - [`diagnostics`]: signal magnification, smoothness, gradient norms, and
//!   the numerical theorem checks.

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod ortho;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;

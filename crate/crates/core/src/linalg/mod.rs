//! Dense linear algebra primitives and the reference oracles built on them.

mod eigen;
mod matrix;
pub mod orthogonal;
pub mod random;

pub use eigen::{inverse_sqrt_oracle, spectral_norm_estimate, symeig_oracle, SymmetricEigen};
pub use matrix::{frobenius_norm, matmul, DenseMatrix};
pub(crate) use matrix::dot;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::matrix::DenseMatrix;

/// Glorot (Xavier) uniform sample on `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite Glorot bound");
    DenseMatrix::from_fn(rows, cols, |_, _| dist.sample(rng))
}

pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::random::glorot_uniform;
use crate::linalg::DenseMatrix;

/// `βP + (1−β)I` with `P` Glorot-uniform drawn from a generator seeded with `seed`.
///
/// For rectangular shapes `I` is the partial identity (ones on the main
/// diagonal). `beta` must lie in `[0, 1]`.
pub fn hybrid_init(d_in: usize, d_out: usize, beta: f64, seed: u64) -> DenseMatrix {
    hybrid_init_with(d_in, d_out, beta, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn hybrid_init_with<R: Rng + ?Sized>(d_in: usize, d_out: usize, beta: f64, rng: &mut R) -> DenseMatrix {
    debug_assert!((0.0..=1.0).contains(&beta), "beta {beta} outside [0, 1]");
    let p = glorot_uniform(d_in, d_out, rng);
    if beta == 1.0 {
        return p;
    }
    let mut q = p.scale(beta);
    for i in 0..d_in.min(d_out) {
        q[(i, i)] += 1.0 - beta;
    }
    q
}

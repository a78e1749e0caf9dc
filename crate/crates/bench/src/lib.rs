//! Input builders shared by the benchmarks.

use ortho_gconv::graph::Graph;
use ortho_gconv::linalg::random::gaussian;
use ortho_gconv::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian(rows, cols, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Random graph with roughly `avg_degree` neighbors per node.
pub fn random_graph(n: usize, avg_degree: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(usize, usize)> = (0..n * avg_degree / 2)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .filter(|(a, b)| a != b)
        .collect();
    Graph::from_edges(n, edges).expect("ids are in range")
}

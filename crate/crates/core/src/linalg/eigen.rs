//! Reference oracles: symmetric eigendecomposition (cyclic Jacobi), the
//! matrix inverse square root built on it, and a power-iteration estimate of
//! the spectral norm.
//!
//! These are test-time references. The training path never calls them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    /// `V · diag(f(λ)) · Vᵀ`
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let scaled: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let vi = self.vectors.row(i);
            for j in 0..n {
                let vj = self.vectors.row(j);
                let mut acc = 0.0;
                for k in 0..n {
                    acc += vi[k] * scaled[k] * vj[k];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.apply_spectral(|l| l)
    }
}

fn check_symmetric(m: &DenseMatrix, op: &'static str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::shape(op, "square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    let tol = SYMMETRY_TOL * m.max_abs().max(1.0);
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > tol {
                return Err(Error::contract(
                    op,
                    format!("asymmetric at ({i},{j}): |m_ij - m_ji| = {gap:e}"),
                ));
            }
        }
    }
    Ok(())
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Each sweep visits every off-diagonal pair once and zeroes it with a plane
/// rotation; accumulated rotations form the eigenvector matrix.
pub fn symeig_oracle(m: &DenseMatrix) -> Result<SymmetricEigen> {
    check_symmetric(m, "symeig_oracle")?;
    let n = m.rows();
    // Symmetrize exactly so the rotations act on a truly symmetric matrix.
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// `M^{-1/2}` through the eigendecomposition; eigenvalues at or below `eps`
/// map to zero (pseudo-inverse square root).
pub fn inverse_sqrt_oracle(m: &DenseMatrix, eps: f64) -> Result<DenseMatrix> {
    let eig = symeig_oracle(m)?;
    if let Some(&lowest) = eig.values.first() {
        if lowest < -PSD_TOL {
            return Err(Error::NotPsd { eigenvalue: lowest });
        }
    }
    Ok(eig.apply_spectral(|l| if l > eps { l.powf(-0.5) } else { 0.0 }))
}

/// Power iteration on `mᵀm`; returns the estimated largest singular value.
pub fn spectral_norm_estimate(m: &DenseMatrix, iters: usize, seed: u64) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::shape(
            "spectral_norm_estimate",
            "square matrix",
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut x);
    for _ in 0..iters.max(1) {
        let mx = mat_vec(m, &x);
        let mut y = mat_t_vec(m, &mx);
        let norm = normalize(&mut y);
        if norm == 0.0 {
            return Ok(0.0);
        }
        x = y;
    }
    // ‖m x‖ for the converged unit direction x.
    let mx = mat_vec(m, &x);
    Ok(dot(&mx, &mx).sqrt())
}

fn mat_vec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..m.rows()).map(|i| dot(m.row(i), x)).collect()
}

fn mat_t_vec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (i, &xi) in x.iter().enumerate() {
        for (o, &v) in out.iter_mut().zip(m.row(i)) {
            *o += v * xi;
        }
    }
    out
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::gaussian;

    #[test]
    fn diagonal_input_eigenvectors_are_identity_columns() {
        let eig = symeig_oracle(&DenseMatrix::diag(&[2.0, 5.0])).unwrap();
        assert_eq!(eig.values, vec![2.0, 5.0]);
        for c in 0..2 {
            let col: Vec<f64> = (0..2).map(|r| eig.vectors[(r, c)].abs()).collect();
            assert!(col.contains(&1.0) && col.contains(&0.0));
        }
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = symeig_oracle(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // λ² - 4λ + 3 = 0
        let m = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let eig = symeig_oracle(&m).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(symeig_oracle(&m), Err(Error::Contract { .. })));
    }

    #[test]
    fn random_reconstruction_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 16, 40] {
            let g = gaussian(n, n, 1.0, &mut rng);
            let m = g.add(&g.transpose()).unwrap();
            let eig = symeig_oracle(&m).unwrap();
            let recon = eig.reconstruct();
            assert!(recon.sub(&m).unwrap().frobenius_norm() < 1e-9, "n={n}");
            let vtv = eig.vectors.t_matmul(&eig.vectors).unwrap();
            assert!(vtv.sub(&DenseMatrix::identity(n)).unwrap().frobenius_norm() < 1e-9);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn inverse_sqrt_fixed_points() {
        let id = DenseMatrix::identity(4);
        assert!(inverse_sqrt_oracle(&id, 1e-12).unwrap().max_abs_diff(&id).unwrap() < 1e-15);
        let r = inverse_sqrt_oracle(&DenseMatrix::diag(&[4.0, 1.0]), 1e-12).unwrap();
        assert!(r.max_abs_diff(&DenseMatrix::diag(&[0.5, 1.0])).unwrap() < 1e-15);
    }

    #[test]
    fn inverse_sqrt_defining_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = gaussian(6, 6, 1.0, &mut rng);
        let q = q.scale(1.0 / q.frobenius_norm());
        let m = q.matmul_t(&q).unwrap();
        let r = inverse_sqrt_oracle(&m, 1e-14).unwrap();
        let rmr = r.matmul(&m).unwrap().matmul(&r).unwrap();
        assert!(rmr.sub(&DenseMatrix::identity(6)).unwrap().frobenius_norm() < 1e-7);
    }

    #[test]
    fn inverse_sqrt_rejects_negative_spectrum() {
        let m = DenseMatrix::diag(&[1.0, -0.5]);
        assert!(matches!(inverse_sqrt_oracle(&m, 1e-12), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn inverse_sqrt_zero_eigenvalue_maps_to_zero() {
        let r = inverse_sqrt_oracle(&DenseMatrix::diag(&[4.0, 0.0]), 1e-12).unwrap();
        assert_eq!(r, DenseMatrix::diag(&[0.5, 0.0]));
    }

    #[test]
    fn spectral_norm_simple_cases() {
        let d = DenseMatrix::diag(&[3.0, 1.0]);
        assert!((spectral_norm_estimate(&d, 200, 0).unwrap() - 3.0).abs() < 1e-6);
        let id = DenseMatrix::identity(5);
        assert!((spectral_norm_estimate(&id, 10, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(spectral_norm_estimate(&DenseMatrix::zeros(2, 3), 10, 0).is_err());
    }

    #[test]
    fn spectral_norm_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = gaussian(8, 8, 1.0, &mut rng);
        let est = spectral_norm_estimate(&m, 2000, 7).unwrap();
        let mtm = m.t_matmul(&m).unwrap();
        let top = *symeig_oracle(&mtm).unwrap().values.last().unwrap();
        assert!((est - top.sqrt()).abs() < 1e-5, "{est} vs {}", top.sqrt());
    }
}

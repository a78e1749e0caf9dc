use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::Penalty;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerOutput {
    pub loss: f64,
    /// `∂loss/∂W_l`, one per input weight.
    pub grads_w: Vec<DenseMatrix>,
    /// `∂loss/∂c_l`
    pub grads_c: Vec<f64>,
}

/// `λ Σ_l ‖W_l W_lᵀ − c_l I‖_F^p` with `p` set by `penalty`.
///
/// With `E = WWᵀ − cI` the squared form has gradients `4λEW` and
/// `−2λ·tr(E)`; the plain norm divides both by `2‖E‖_F` and uses zero at
/// `E = 0`.
pub fn ortho_regularizer(weights: &[&DenseMatrix], scales: &[f64], lambda: f64, penalty: Penalty) -> Result<RegularizerOutput> {
    if weights.len() != scales.len() {
        return Err(Error::shape("ortho_regularizer", format!("{} scales", weights.len()), scales.len()));
    }
    let mut loss = 0.0;
    let mut grads_w = Vec::with_capacity(weights.len());
    let mut grads_c = Vec::with_capacity(weights.len());
    for (&w, &c) in weights.iter().zip(scales) {
        let e = w.matmul_t(w)?.add_diagonal(-c);
        let norm = e.frobenius_norm();
        let (term, factor) = match penalty {
            Penalty::SquaredNorm => (norm * norm, 1.0),
            Penalty::Norm if norm > 0.0 => (norm, 1.0 / (2.0 * norm)),
            Penalty::Norm => (0.0, 0.0),
        };
        loss += lambda * term;
        grads_w.push(e.matmul(w)?.scale(4.0 * lambda * factor));
        grads_c.push(-2.0 * lambda * factor * e.trace());
    }
    Ok(RegularizerOutput { loss, grads_w, grads_c })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::orthogonal::householder_product;
    use crate::linalg::random::gaussian;

    #[test]
    fn orthogonal_weight_unit_scale_is_free() {
        let w = householder_product(5, &mut ChaCha8Rng::seed_from_u64(0));
        let out = ortho_regularizer(&[&w], &[1.0], 1.0, Penalty::SquaredNorm).unwrap();
        assert!(out.loss < 1e-20);
        assert!(out.grads_w[0].max_abs() < 1e-12);
        assert!(out.grads_c[0].abs() < 1e-12);
        // The plain norm is only flat at an exact zero; rounding leaves a unit subgradient.
        let exact = ortho_regularizer(&[&DenseMatrix::identity(3)], &[1.0], 1.0, Penalty::Norm).unwrap();
        assert_eq!(exact.loss, 0.0);
        assert_eq!(exact.grads_c[0], 0.0);
    }

    #[test]
    fn diagonal_closed_form() {
        let w = DenseMatrix::diag(&[2.0, 1.0]);
        let out = ortho_regularizer(&[&w], &[1.0], 1.0, Penalty::Norm).unwrap();
        assert_eq!(out.loss, 3.0);
        let sq = ortho_regularizer(&[&w], &[1.0], 1.0, Penalty::SquaredNorm).unwrap();
        assert_eq!(sq.loss, 9.0);
    }

    fn check_fd(penalty: Penalty, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws = [gaussian(3, 3, 0.7, &mut rng), gaussian(4, 4, 0.5, &mut rng)];
        let cs = [0.8, 1.3];
        let lambda = 0.37;
        let refs: Vec<&DenseMatrix> = ws.iter().collect();
        let out = ortho_regularizer(&refs, &cs, lambda, penalty).unwrap();
        let h = 1e-6;
        let eval = |ws: &[DenseMatrix], cs: &[f64]| {
            let refs: Vec<&DenseMatrix> = ws.iter().collect();
            ortho_regularizer(&refs, cs, lambda, penalty).unwrap().loss
        };
        for l in 0..ws.len() {
            for i in 0..ws[l].rows() {
                for j in 0..ws[l].cols() {
                    let mut plus = ws.clone();
                    plus[l][(i, j)] += h;
                    let mut minus = ws.clone();
                    minus[l][(i, j)] -= h;
                    let numeric = (eval(&plus, &cs) - eval(&minus, &cs)) / (2.0 * h);
                    assert!((numeric - out.grads_w[l][(i, j)]).abs() < 1e-6, "{penalty:?} W{l}[{i},{j}]");
                }
            }
            let mut plus = cs;
            plus[l] += h;
            let mut minus = cs;
            minus[l] -= h;
            let numeric = (eval(&ws, &plus) - eval(&ws, &minus)) / (2.0 * h);
            assert!((numeric - out.grads_c[l]).abs() < 1e-6, "{penalty:?} c{l}");
        }
    }

    #[test]
    fn squared_gradients_match_finite_differences() {
        check_fd(Penalty::SquaredNorm, 1);
        check_fd(Penalty::SquaredNorm, 2);
    }

    #[test]
    fn norm_gradients_match_finite_differences() {
        check_fd(Penalty::Norm, 3);
    }
}

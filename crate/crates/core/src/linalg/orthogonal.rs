//! Exactly orthogonal constructions used by the norm-preservation checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{dot, DenseMatrix};

/// Product of `d` Householder reflectors `I - 2vvᵀ/‖v‖²` with Gaussian `v`.
pub fn householder_product<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseMatrix {
    let mut q = DenseMatrix::identity(d);
    for _ in 0..d {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let vv = dot(&v, &v);
        if vv == 0.0 {
            continue;
        }
        apply_reflector(&mut q, &v, vv);
    }
    q
}

/// `q ← q · (I - 2vvᵀ/vv)`
fn apply_reflector(q: &mut DenseMatrix, v: &[f64], vv: f64) {
    for i in 0..q.rows() {
        let row = q.row_mut(i);
        let proj = 2.0 * dot(row, v) / vv;
        for (r, &vk) in row.iter_mut().zip(v) {
            *r -= proj * vk;
        }
    }
}

/// Permutation matrix with `P[i, perm[i]] = 1`.
pub fn permutation(perm: &[usize]) -> DenseMatrix {
    let d = perm.len();
    let mut p = DenseMatrix::zeros(d, d);
    for (i, &j) in perm.iter().enumerate() {
        p[(i, j)] = 1.0;
    }
    p
}

pub fn random_permutation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseMatrix {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    permutation(&perm)
}

/// Plane rotation by `angle` in coordinates `(p, q)`.
pub fn givens(d: usize, p: usize, q: usize, angle: f64) -> DenseMatrix {
    let mut g = DenseMatrix::identity(d);
    let (s, c) = angle.sin_cos();
    g[(p, p)] = c;
    g[(q, q)] = c;
    g[(p, q)] = -s;
    g[(q, p)] = s;
    g
}

/// Product of `count` random Givens rotations.
pub fn random_givens_product<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> DenseMatrix {
    let mut out = DenseMatrix::identity(d);
    if d < 2 {
        return out;
    }
    for _ in 0..count {
        let p = rng.random_range(0..d);
        let mut q = rng.random_range(0..d - 1);
        if q >= p {
            q += 1;
        }
        let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        // Rotating columns p and q in place keeps the product exact to rounding.
        let (s, c) = angle.sin_cos();
        for i in 0..d {
            let (a, b) = (out[(i, p)], out[(i, q)]);
            out[(i, p)] = c * a + s * b;
            out[(i, q)] = -s * a + c * b;
        }
    }
    out
}

/// `‖QQᵀ - I‖_F`
pub fn orthogonality_defect(q: &DenseMatrix) -> f64 {
    let qqt = q.matmul_t(q).expect("q · qᵀ is always well-formed");
    qqt.add_diagonal(-1.0).frobenius_norm()
}

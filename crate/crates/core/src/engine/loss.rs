use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Mean over `mask` rows of `−log softmax(logits)[label]`, and its gradient.
/// Unmasked rows receive zero gradient.
pub fn masked_cross_entropy(logits: &DenseMatrix, labels: &[usize], mask: &[usize]) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(Error::contract("masked_cross_entropy", "empty mask"));
    }
    if labels.len() != logits.rows() {
        return Err(Error::shape("masked_cross_entropy", format!("{} labels", logits.rows()), labels.len()));
    }
    let scale = 1.0 / mask.len() as f64;
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for &i in mask {
        let row = logits.row(i);
        let label = labels[i];
        if label >= row.len() {
            return Err(Error::contract("masked_cross_entropy", format!("label {label} out of range")));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_sum = sum.ln() + max;
        loss += log_sum - row[label];
        let grad_row = grad.row_mut(i);
        for (g, &z) in grad_row.iter_mut().zip(row) {
            *g = (z - log_sum).exp() * scale;
        }
        grad_row[label] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Index of the largest entry in each row; ties go to the lowest index.
pub fn argmax_rows(logits: &DenseMatrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(logits: &DenseMatrix, labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::contract("accuracy", "empty mask"));
    }
    let pred = argmax_rows(logits);
    let correct = mask.iter().filter(|&&i| pred[i] == labels[i]).count();
    Ok(correct as f64 / mask.len() as f64)
}

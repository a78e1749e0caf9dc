use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::ortho::OrthoLayerParams;

use super::model::{Gradients, ModelState};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moments for every raw weight and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: usize,
    m_weights: Vec<DenseMatrix>,
    v_weights: Vec<DenseMatrix>,
    m_scales: Vec<f64>,
    v_scales: Vec<f64>,
}

impl AdamState {
    pub fn new(layers: &[OrthoLayerParams]) -> Self {
        let zeros = |p: &OrthoLayerParams| DenseMatrix::zeros(p.raw_weight.rows(), p.raw_weight.cols());
        Self {
            step: 0,
            m_weights: layers.iter().map(zeros).collect(),
            v_weights: layers.iter().map(zeros).collect(),
            m_scales: vec![0.0; layers.len()],
            v_scales: vec![0.0; layers.len()],
        }
    }
}

/// One Adam update of `param` in place; `step` is 1-based.
///
/// The L2 term `weight_decay · θ` joins the gradient before the moments.
pub fn adam_update(param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, weight_decay: f64, step: usize) {
    let bias1 = 1.0 - ADAM_BETA1.powi(step as i32);
    let bias2 = 1.0 - ADAM_BETA2.powi(step as i32);
    for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
        let g = g + weight_decay * *p;
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

/// Applies one Adam step to every raw weight and scale and clears the tape.
/// Weight decay touches raw weights only.
pub fn adam_step(state: &mut ModelState, grads: &Gradients, lr: f64, weight_decay: f64, step_count: usize) {
    let (layers, adam) = state.params_and_optimizer();
    adam.step = step_count;
    for (l, layer) in layers.iter_mut().enumerate() {
        adam_update(
            layer.raw_weight.data_mut(),
            grads.weights[l].data(),
            adam.m_weights[l].data_mut(),
            adam.v_weights[l].data_mut(),
            lr,
            weight_decay,
            step_count,
        );
        adam_update(
            std::slice::from_mut(&mut layer.scale),
            &[grads.scales[l]],
            std::slice::from_mut(&mut adam.m_scales[l]),
            std::slice::from_mut(&mut adam.v_scales[l]),
            lr,
            0.0,
            step_count,
        );
    }
    state.clear_tape();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut p = [1.25];
        let (mut m, mut v) = ([0.0], [0.0]);
        adam_update(&mut p, &[0.0], &mut m, &mut v, 0.1, 0.0, 1);
        assert_eq!(p, [1.25]);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        let mut p = [0.0];
        let (mut m, mut v) = ([0.0], [0.0]);
        let lr = 0.01;
        let mut last = 0.0;
        for t in 1..=5000 {
            let before = p[0];
            adam_update(&mut p, &[3.0], &mut m, &mut v, lr, 0.0, t);
            last = before - p[0];
        }
        assert!((last - lr).abs() < 1e-6 * lr * 1e3, "{last}");
    }

    #[test]
    fn three_steps_match_hand_recurrence() {
        // g = 1 every step, lr = 0.1.
        let lr = 0.1;
        let mut p = [0.5];
        let (mut m, mut v) = ([0.0], [0.0]);
        let mut expected = 0.5;
        let (mut mh, mut vh) = (0.0f64, 0.0f64);
        for t in 1..=3 {
            adam_update(&mut p, &[1.0], &mut m, &mut v, lr, 0.0, t);
            mh = 0.9 * mh + 0.1;
            vh = 0.999 * vh + 0.001;
            let m_hat = mh / (1.0 - 0.9f64.powi(t as i32));
            let v_hat = vh / (1.0 - 0.999f64.powi(t as i32));
            expected -= lr * m_hat / (v_hat.sqrt() + 1e-8);
        }
        assert!((p[0] - expected).abs() < 1e-15);
        // With unit gradients the bias-corrected ratio is exactly one each step.
        assert!((p[0] - (0.5 - 3.0 * lr / (1.0 + 1e-8))).abs() < 1e-12);
    }

    #[test]
    fn weight_decay_enters_gradient() {
        let mut a = [2.0];
        let mut b = [2.0];
        let (mut m1, mut v1, mut m2, mut v2) = ([0.0], [0.0], [0.0], [0.0]);
        adam_update(&mut a, &[0.3], &mut m1, &mut v1, 0.01, 0.1, 1);
        adam_update(&mut b, &[0.3 + 0.1 * 2.0], &mut m2, &mut v2, 0.01, 0.0, 1);
        assert_eq!(a, b);
    }
}

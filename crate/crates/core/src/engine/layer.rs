use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;

use super::Activation;

/// Saved forward state of one GCN layer.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// `Ĥ = Â · H_prev`
    pub aggregated: DenseMatrix,
    /// `Ĥ · W`
    pub pre_activation: DenseMatrix,
    pub weight: DenseMatrix,
    pub activation: Activation,
}

/// `H = σ(Â · H_prev · W)`
pub fn gcn_layer_forward(graph: &Graph, h_prev: &DenseMatrix, weight: &DenseMatrix, activation: Activation) -> Result<(DenseMatrix, LayerCache)> {
    if h_prev.cols() != weight.rows() {
        return Err(Error::shape(
            "gcn_layer_forward",
            format!("weight with {} rows", h_prev.cols()),
            format!("{}x{}", weight.rows(), weight.cols()),
        ));
    }
    let aggregated = graph.spmm(h_prev)?;
    let pre_activation = aggregated.matmul(weight)?;
    let h = pre_activation.map(|v| activation.apply(v));
    Ok((
        h,
        LayerCache {
            aggregated,
            pre_activation,
            weight: weight.clone(),
            activation,
        },
    ))
}

/// Returns `(∂L/∂H_prev, ∂L/∂W)` given `∂L/∂H`. Uses `Âᵀ = Â`.
pub fn gcn_layer_backward(graph: &Graph, cache: &LayerCache, upstream: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (grad_h_prev, grad_w) = backward_inner(graph, cache, upstream, true)?;
    Ok((grad_h_prev.expect("input gradient requested"), grad_w))
}

/// Skips the input gradient when `want_input` is false (first layer).
pub(crate) fn backward_inner(
    graph: &Graph,
    cache: &LayerCache,
    upstream: &DenseMatrix,
    want_input: bool,
) -> Result<(Option<DenseMatrix>, DenseMatrix)> {
    if upstream.shape() != cache.pre_activation.shape() {
        return Err(Error::contract(
            "gcn_layer_backward",
            format!(
                "cache holds a {:?} output but upstream gradient is {:?}; stale cache?",
                cache.pre_activation.shape(),
                upstream.shape()
            ),
        ));
    }
    let delta = match cache.activation {
        Activation::Identity => upstream.clone(),
        act => upstream.zip_map(&cache.pre_activation, "gcn_layer_backward", |g, z| g * act.derivative(z))?,
    };
    let grad_w = cache.aggregated.t_matmul(&delta)?;
    let grad_h_prev = if want_input {
        Some(graph.spmm(&delta.matmul_t(&cache.weight)?)?)
    } else {
        None
    };
    Ok((grad_h_prev, grad_w))
}

use crate::error::NnError;
use crate::scalar::Scalar;

use super::tensor::Tensor;

/// Floor applied to probabilities inside the log of the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn relu<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| v.max(S::zero()))
}

/// Softmax with max-subtraction.
pub fn softmax<S: Scalar>(z: &[S]) -> Vec<S> {
    let max = z.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn cross_entropy<S: Scalar>(probs: &[S], label: usize) -> Result<f64, NnError> {
    let p = probs
        .get(label)
        .ok_or(NnError::LabelOutOfRange { label, classes: probs.len() })?;
    Ok(-p.as_f64().max(PROB_FLOOR).ln())
}

/// Loss and its gradient with respect to the logits, `softmax(z) - onehot`.
pub fn softmax_cross_entropy<S: Scalar>(logits: &[S], label: usize) -> Result<(f64, Vec<S>), NnError> {
    let mut probs = softmax(logits);
    let loss = cross_entropy(&probs, label)?;
    probs[label] -= S::one();
    Ok((loss, probs))
}

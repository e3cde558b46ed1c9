//! Central finite-difference checks of the hand-written gradients.

use crate::error::NnError;
use crate::rng;

use super::activation::softmax_cross_entropy;
use super::dropout::DropoutMode;
use super::network::{Gradients, LayerCache, Network};
use super::tensor::Tensor;

/// Scalar function of the network output whose gradient is checked.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Softmax cross-entropy against a label.
    CrossEntropy(usize),
    /// `sum_i w_i * output_i`.
    Linear(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose perturbation moved a ReLU or max-pool switch; the
    /// function is not differentiable across such a kink.
    pub skipped: usize,
}

/// Denominator floor of the relative error, so that gradients that are
/// zero up to rounding compare on an absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// ReLU signs and pooling winners: the linear region the input lies in.
fn region(caches: &[LayerCache<f64>]) -> Vec<usize> {
    let mut sig = Vec::new();
    for c in caches {
        match c {
            LayerCache::Relu { positive } => sig.extend(positive.iter().map(|&p| usize::from(p))),
            LayerCache::Pool { argmax, .. } => sig.extend_from_slice(argmax),
            _ => {}
        }
    }
    sig
}

fn evaluate(
    net: &Network<f64>,
    x: &Tensor<f64>,
    objective: Objective,
    mode: DropoutMode,
    seed: u64,
) -> Result<(f64, Vec<f64>, Vec<LayerCache<f64>>), NnError> {
    // Re-seeding keeps dropout masks identical across evaluations.
    let (out, caches) = net.forward_cached(x, mode, &mut rng::from_seed(seed))?;
    let (value, grad) = match objective {
        Objective::CrossEntropy(label) => softmax_cross_entropy(out.data(), label)?,
        Objective::Linear(w) => {
            if w.len() != out.len() {
                return Err(NnError::ShapeMismatch(format!("{} weights for {} outputs", w.len(), out.len())));
            }
            (out.data().iter().zip(w).map(|(a, b)| a * b).sum(), w.to_vec())
        }
    };
    Ok((value, grad, caches))
}

/// Compares back-propagated gradients with respect to the selected
/// parameters and input entries against central differences with step `h`.
/// `params` lists `(buffer, index)` coordinates of [`Network::params`] and
/// `inputs` lists input entries; `None` checks all of them.
pub fn check_gradients(
    net: &Network<f64>,
    x: &Tensor<f64>,
    objective: Objective,
    mode: DropoutMode,
    seed: u64,
    h: f64,
    params: Option<&[(usize, usize)]>,
    inputs: Option<&[usize]>,
) -> Result<GradCheck, NnError> {
    let (_, grad_out, caches) = evaluate(net, x, objective, mode, seed)?;
    let base = region(&caches);
    let mut grads = Gradients::zeros(&net.param_shapes());
    let input_grad = net
        .backward(&caches, grad_out, 0, Some(&mut grads), true)
        .expect("input gradient requested");

    let mut report = GradCheck { max_rel_error: 0.0, checked: 0, skipped: 0 };
    let mut record = |analytic: f64, plus: (f64, Vec<usize>), minus: (f64, Vec<usize>)| {
        if plus.1 != base || minus.1 != base {
            report.skipped += 1;
            return;
        }
        let numeric = (plus.0 - minus.0) / (2.0 * h);
        report.max_rel_error = report.max_rel_error.max(relative_error(analytic, numeric));
        report.checked += 1;
    };

    let all: Vec<(usize, usize)>;
    let coords = match params {
        Some(c) => c,
        None => {
            all = net
                .param_shapes()
                .iter()
                .enumerate()
                .flat_map(|(b, &n)| (0..n).map(move |i| (b, i)))
                .collect();
            &all
        }
    };
    let mut probe = net.clone();
    for &(b, i) in coords {
        let original = probe.params()[b][i];
        let mut shifted = |delta: f64| -> Result<(f64, Vec<usize>), NnError> {
            probe.params_mut()[b][i] = original + delta;
            let (v, _, c) = evaluate(&probe, x, objective, mode, seed)?;
            Ok((v, region(&c)))
        };
        let plus = shifted(h)?;
        let minus = shifted(-h)?;
        probe.params_mut()[b][i] = original;
        record(grads.buffers[b][i], plus, minus);
    }

    let every: Vec<usize> = (0..x.len()).collect();
    for &i in inputs.unwrap_or(&every) {
        let shifted = |delta: f64| -> Result<(f64, Vec<usize>), NnError> {
            let mut xi = x.clone();
            xi.data_mut()[i] += delta;
            let (v, _, c) = evaluate(net, &xi, objective, mode, seed)?;
            Ok((v, region(&c)))
        };
        let plus = shifted(h)?;
        let minus = shifted(-h)?;
        record(input_grad[i], plus, minus);
    }
    Ok(report)
}

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Moment accumulators, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S = f64> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<S>>,
    pub v: Vec<Vec<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            m: shapes.iter().map(|&n| vec![S::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![S::zero(); n]).collect(),
        }
    }
}

/// One bias-corrected Adam update of every parameter buffer.
pub fn adam_step<S: Scalar>(params: &mut [&mut [S]], grads: &[Vec<S>], state: &mut AdamState<S>) {
    assert_eq!(params.len(), grads.len(), "one gradient per parameter tensor");
    assert_eq!(params.len(), state.m.len(), "optimizer state mirrors parameters");
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let lr = S::of(c.learning_rate);
    let (b1, b2, eps) = (S::of(c.beta1), S::of(c.beta2), S::of(c.epsilon));
    let corr1 = S::of(1.0 - c.beta1.powi(t));
    let corr2 = S::of(1.0 - c.beta2.powi(t));
    for ((param, grad), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (S::one() - b1) * g;
            v[i] = b2 * v[i] + (S::one() - b2) * g * g;
            let m_hat = m[i] / corr1;
            let v_hat = v[i] / corr2;
            param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut w = vec![1.0f64];
        let mut state = AdamState::new(AdamConfig::default(), &[1]);
        let grad = vec![vec![2.0 * w[0]]];
        adam_step(&mut [w.as_mut_slice()], &grad, &mut state);
        assert!((w[0] - 0.999).abs() < 1e-9);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut w = vec![0.3f64, -0.7];
        let mut state = AdamState::new(AdamConfig::default(), &[2]);
        for _ in 0..5 {
            adam_step(&mut [w.as_mut_slice()], &[vec![0.0, 0.0]], &mut state);
        }
        assert_eq!(w, vec![0.3, -0.7]);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut w = vec![1.0f64];
        let mut state = AdamState::new(AdamConfig { learning_rate: 0.05, ..Default::default() }, &[1]);
        for _ in 0..500 {
            let g = vec![vec![2.0 * w[0]]];
            adam_step(&mut [w.as_mut_slice()], &g, &mut state);
        }
        assert!(w[0].abs() < 1e-2);
    }
}

use rand::Rng;

use crate::error::NnError;
use crate::scalar::Scalar;

use super::gemm::gemm;

/// Fully connected layer `W v + b` with `W` stored `[units, inputs]`.
/// The activation is applied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S = f64> {
    pub inputs: usize,
    pub units: usize,
    pub weights: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> Dense<S> {
    pub fn zeros(inputs: usize, units: usize) -> Result<Self, NnError> {
        if inputs == 0 || units == 0 {
            return Err(NnError::InvalidConfig("dense dimensions must be positive".into()));
        }
        Ok(Self { inputs, units, weights: vec![S::zero(); inputs * units], bias: vec![S::zero(); units] })
    }

    pub fn init<R: Rng + ?Sized>(inputs: usize, units: usize, rng: &mut R) -> Result<Self, NnError> {
        let mut layer = Self::zeros(inputs, units)?;
        let limit = (6.0 / inputs as f64).sqrt();
        for w in &mut layer.weights {
            *w = S::of(rng.random_range(-limit..limit));
        }
        Ok(layer)
    }

    pub fn forward(&self, v: &[S]) -> Result<Vec<S>, NnError> {
        if v.len() != self.inputs {
            return Err(NnError::ShapeMismatch(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs,
                v.len()
            )));
        }
        let mut out = self.bias.clone();
        gemm(S::one(), &self.weights, (self.units, self.inputs), false, v, (self.inputs, 1), false, S::one(), &mut out);
        Ok(out)
    }

    pub fn backward(
        &self,
        input: &[S],
        grad_out: &[S],
        grad_w: &mut [S],
        grad_b: &mut [S],
        want_input: bool,
    ) -> Option<Vec<S>> {
        gemm(S::one(), grad_out, (self.units, 1), false, input, (1, self.inputs), false, S::one(), grad_w);
        for (b, &g) in grad_b.iter_mut().zip(grad_out) {
            *b += g;
        }
        want_input.then(|| {
            let mut grad_in = vec![S::zero(); self.inputs];
            gemm(S::one(), &self.weights, (self.units, self.inputs), true, grad_out, (self.units, 1), false, S::zero(), &mut grad_in);
            grad_in
        })
    }
}

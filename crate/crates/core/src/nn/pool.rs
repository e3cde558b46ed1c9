use crate::error::NnError;
use crate::scalar::Scalar;

use super::tensor::Tensor;

/// Non-overlapping `p x p` max-pooling. Ragged edge tiles are pooled over
/// whatever rows and columns remain, so the output is `ceil(H/p) x ceil(W/p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool2d {
    pub size: usize,
}

impl MaxPool2d {
    pub fn new(size: usize) -> Result<Self, NnError> {
        if size == 0 {
            return Err(NnError::InvalidConfig("pool size must be positive".into()));
        }
        Ok(Self { size })
    }

    pub fn output_shape(&self, [c, h, w]: [usize; 3]) -> [usize; 3] {
        [c, h.div_ceil(self.size), w.div_ceil(self.size)]
    }

    /// Pooled tensor and, per output element, the flat input index of its
    /// maximum (first in row-major order on ties).
    pub fn forward_cached<S: Scalar>(&self, input: &Tensor<S>) -> Result<(Tensor<S>, Vec<usize>), NnError> {
        let shape @ [c, h, w] = input.chw()?;
        let [_, oh, ow] = self.output_shape(shape);
        let x = input.data();
        let p = self.size;
        let mut out = Vec::with_capacity(c * oh * ow);
        let mut argmax = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            for i in 0..oh {
                for j in 0..ow {
                    let mut best = ch * h * w + i * p * w + j * p;
                    for a in i * p..((i + 1) * p).min(h) {
                        for b in j * p..((j + 1) * p).min(w) {
                            let idx = ch * h * w + a * w + b;
                            if x[idx] > x[best] {
                                best = idx;
                            }
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        Ok((Tensor::new(vec![c, oh, ow], out)?, argmax))
    }

    pub fn forward<S: Scalar>(&self, input: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn backward<S: Scalar>(argmax: &[usize], input_len: usize, grad_out: &[S]) -> Vec<S> {
        let mut grad = vec![S::zero(); input_len];
        for (&i, &g) in argmax.iter().zip(grad_out) {
            grad[i] += g;
        }
        grad
    }
}

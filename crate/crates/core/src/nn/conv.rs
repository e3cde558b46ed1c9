use rand::Rng;

use crate::error::NnError;
use crate::scalar::Scalar;

use super::gemm::gemm;
use super::tensor::Tensor;

/// Valid-padding, stride-1 2-D cross-correlation layer.
///
/// Kernels are stored `[filters, in_channels, k, k]` row-major; output pixel
/// `(f, i, j)` is `bias[f] + sum_{c,a,b} w[f,c,a,b] * x[c, i+a, j+b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<S = f64> {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub weights: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> Conv2d<S> {
    pub fn zeros(in_channels: usize, filters: usize, kernel: usize) -> Result<Self, NnError> {
        if in_channels == 0 || filters == 0 || kernel == 0 {
            return Err(NnError::InvalidConfig("conv dimensions must be positive".into()));
        }
        Ok(Self {
            in_channels,
            filters,
            kernel,
            weights: vec![S::zero(); filters * in_channels * kernel * kernel],
            bias: vec![S::zero(); filters],
        })
    }

    /// He-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(
        in_channels: usize,
        filters: usize,
        kernel: usize,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut layer = Self::zeros(in_channels, filters, kernel)?;
        let limit = (6.0 / layer.patch_len() as f64).sqrt();
        for w in &mut layer.weights {
            *w = S::of(rng.random_range(-limit..limit));
        }
        Ok(layer)
    }

    pub(crate) fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    pub fn output_shape(&self, input: [usize; 3]) -> Result<[usize; 3], NnError> {
        let [c, h, w] = input;
        if c != self.in_channels {
            return Err(NnError::ShapeMismatch(format!(
                "conv expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        if h < self.kernel || w < self.kernel {
            return Err(NnError::ShapeMismatch(format!(
                "{h}x{w} input smaller than {k}x{k} kernel",
                k = self.kernel
            )));
        }
        Ok([self.filters, h - self.kernel + 1, w - self.kernel + 1])
    }

    /// Patch matrix `[C*k*k, H'*W']`.
    fn im2col(&self, x: &[S], [c, h, w]: [usize; 3], [_, oh, ow]: [usize; 3]) -> Vec<S> {
        let k = self.kernel;
        let cols_n = oh * ow;
        let mut cols = vec![S::zero(); c * k * k * cols_n];
        for ch in 0..c {
            for a in 0..k {
                for b in 0..k {
                    let row = (ch * k + a) * k + b;
                    let dst = &mut cols[row * cols_n..(row + 1) * cols_n];
                    for i in 0..oh {
                        let src = &x[ch * h * w + (i + a) * w + b..][..ow];
                        dst[i * ow..(i + 1) * ow].copy_from_slice(src);
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, cols: &[S], [c, h, w]: [usize; 3], [_, oh, ow]: [usize; 3]) -> Vec<S> {
        let k = self.kernel;
        let cols_n = oh * ow;
        let mut x = vec![S::zero(); c * h * w];
        for ch in 0..c {
            for a in 0..k {
                for b in 0..k {
                    let row = (ch * k + a) * k + b;
                    let src = &cols[row * cols_n..(row + 1) * cols_n];
                    for i in 0..oh {
                        let dst = &mut x[ch * h * w + (i + a) * w + b..][..ow];
                        for (d, &s) in dst.iter_mut().zip(&src[i * ow..(i + 1) * ow]) {
                            *d += s;
                        }
                    }
                }
            }
        }
        x
    }

    /// Forward pass; also returns the patch matrix for [`Conv2d::backward`].
    pub fn forward_cached(&self, input: &Tensor<S>) -> Result<(Tensor<S>, Vec<S>), NnError> {
        let in_shape = input.chw()?;
        let out_shape = self.output_shape(in_shape)?;
        let cols = self.im2col(input.data(), in_shape, out_shape);
        let pixels = out_shape[1] * out_shape[2];
        let mut out = vec![S::zero(); self.filters * pixels];
        for (f, row) in out.chunks_mut(pixels).enumerate() {
            row.fill(self.bias[f]);
        }
        gemm(
            S::one(),
            &self.weights,
            (self.filters, self.patch_len()),
            false,
            &cols,
            (self.patch_len(), pixels),
            false,
            S::one(),
            &mut out,
        );
        Ok((Tensor::new(out_shape.to_vec(), out)?, cols))
    }

    pub fn forward(&self, input: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    /// Accumulates parameter gradients into `grad_w` / `grad_b` and returns
    /// the input gradient when `want_input` is set.
    pub fn backward(
        &self,
        cols: &[S],
        in_shape: [usize; 3],
        grad_out: &[S],
        grad_w: &mut [S],
        grad_b: &mut [S],
        want_input: bool,
    ) -> Option<Vec<S>> {
        let out_shape = self.output_shape(in_shape).expect("shape checked in forward");
        let pixels = out_shape[1] * out_shape[2];
        let patch = self.patch_len();
        gemm(S::one(), grad_out, (self.filters, pixels), false, cols, (patch, pixels), true, S::one(), grad_w);
        for (b, row) in grad_b.iter_mut().zip(grad_out.chunks(pixels)) {
            *b += row.iter().copied().sum::<S>();
        }
        if !want_input {
            return None;
        }
        let mut grad_cols = vec![S::zero(); patch * pixels];
        gemm(
            S::one(),
            &self.weights,
            (self.filters, patch),
            true,
            grad_out,
            (self.filters, pixels),
            false,
            S::zero(),
            &mut grad_cols,
        );
        Some(self.col2im(&grad_cols, in_shape, out_shape))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn naive(x: &[f64], [c, h, w]: [usize; 3], layer: &Conv2d<f64>) -> Vec<f64> {
        let k = layer.kernel;
        let (oh, ow) = (h - k + 1, w - k + 1);
        let mut out = vec![0.0; layer.filters * oh * ow];
        for f in 0..layer.filters {
            for i in 0..oh {
                for j in 0..ow {
                    let mut s = layer.bias[f];
                    for ch in 0..c {
                        for a in 0..k {
                            for b in 0..k {
                                s += layer.weights[((f * c + ch) * k + a) * k + b]
                                    * x[(ch * h + i + a) * w + j + b];
                            }
                        }
                    }
                    out[(f * oh + i) * ow + j] = s;
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel() {
        let mut layer = Conv2d::<f64>::zeros(1, 1, 1).unwrap();
        layer.weights[0] = 1.0;
        let img = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(layer.forward(&img).unwrap().data(), img.data());
    }

    #[test]
    fn ones_patch_sums() {
        let mut layer = Conv2d::<f64>::zeros(1, 1, 2).unwrap();
        layer.weights.fill(1.0);
        let out = layer.forward(&Tensor::new(vec![3, 3], vec![1.0; 9]).unwrap()).unwrap();
        assert_eq!(out.shape(), &[1, 2, 2]);
        assert_eq!(out.data(), &[4.0; 4]);
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let mut r = rng::from_seed(3);
        for (c, f, k, h, w) in [(1, 1, 3, 4, 4), (2, 3, 3, 6, 5), (3, 2, 2, 5, 7)] {
            let mut layer = Conv2d::<f64>::init(c, f, k, &mut r).unwrap();
            layer.bias.iter_mut().for_each(|b| *b = r.random_range(-1.0..1.0));
            let x: Vec<f64> = (0..c * h * w).map(|_| r.random_range(-1.0..1.0)).collect();
            let out = layer.forward(&Tensor::new(vec![c, h, w], x.clone()).unwrap()).unwrap();
            for (a, b) in out.data().iter().zip(naive(&x, [c, h, w], &layer)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let layer = Conv2d::<f64>::zeros(1, 2, 3).unwrap();
        assert!(layer.forward(&Tensor::zeros(vec![2, 2])).is_err());
        assert!(layer.forward(&Tensor::zeros(vec![2, 4, 4])).is_err());
        assert!(Conv2d::<f64>::zeros(1, 0, 3).is_err());
    }
}

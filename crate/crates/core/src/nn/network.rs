use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::NnError;
use crate::scalar::Scalar;

use super::activation::softmax_cross_entropy;
use super::adam::{adam_step, AdamState};
use super::conv::Conv2d;
use super::dense::Dense;
use super::dropout::{dropout_mask, DropoutMode};
use super::pool::MaxPool2d;
use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<S = f64> {
    Conv(Conv2d<S>),
    MaxPool(MaxPool2d),
    Relu,
    Dropout { rate: f64 },
    Flatten,
    Dense(Dense<S>),
}

impl<S: Scalar> Layer<S> {
    fn param_count(&self) -> usize {
        match self {
            Layer::Conv(_) | Layer::Dense(_) => 2,
            _ => 0,
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let as_chw = |s: &[usize]| match *s {
            [h, w] => Ok([1, h, w]),
            [c, h, w] => Ok([c, h, w]),
            _ => Err(NnError::ShapeMismatch(format!("expected an image, got shape {s:?}"))),
        };
        Ok(match self {
            Layer::Conv(c) => c.output_shape(as_chw(input)?)?.to_vec(),
            Layer::MaxPool(p) => p.output_shape(as_chw(input)?).to_vec(),
            Layer::Relu | Layer::Dropout { .. } => input.to_vec(),
            Layer::Flatten => vec![input.iter().product()],
            Layer::Dense(d) => {
                let len: usize = input.iter().product();
                if len != d.inputs {
                    return Err(NnError::ShapeMismatch(format!(
                        "dense layer expects {} inputs, previous layer emits {len}",
                        d.inputs
                    )));
                }
                vec![d.units]
            }
        })
    }
}

/// What a layer keeps from its forward pass for the backward pass.
#[derive(Debug, Clone)]
pub enum LayerCache<S = f64> {
    Conv { cols: Vec<S>, in_shape: [usize; 3] },
    Pool { argmax: Vec<usize>, in_shape: Vec<usize> },
    Relu { positive: Vec<bool> },
    Dropout { mask: Option<Vec<S>> },
    Flatten { in_shape: Vec<usize> },
    Dense { input: Vec<S> },
}

/// Gradient buffers laid out like [`Network::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S = f64> {
    pub buffers: Vec<Vec<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn zeros(shapes: &[usize]) -> Self {
        Self { buffers: shapes.iter().map(|&n| vec![S::zero(); n]).collect() }
    }

    pub fn scale(&mut self, factor: S) {
        self.buffers.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.buffers.iter().flatten().all(|g| g.is_finite())
    }
}

/// Sequential network over a fixed layer set; the last layer emits logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<S = f64> {
    input_shape: Vec<usize>,
    layers: Vec<Layer<S>>,
}

impl<S: Scalar> Network<S> {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer<S>>) -> Result<Self, NnError> {
        let net = Self { input_shape, layers };
        net.shapes()?;
        Ok(net)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    /// Input shape followed by every layer's output shape.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        let mut shapes = vec![self.input_shape.clone()];
        for layer in &self.layers {
            let next = layer.output_shape(shapes.last().expect("nonempty"))?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn output_len(&self) -> usize {
        self.shapes().expect("validated").last().expect("nonempty").iter().product()
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }

    pub fn params(&self) -> Vec<&[S]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => out.extend([c.weights.as_slice(), c.bias.as_slice()]),
                Layer::Dense(d) => out.extend([d.weights.as_slice(), d.bias.as_slice()]),
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [S]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => out.extend([c.weights.as_mut_slice(), c.bias.as_mut_slice()]),
                Layer::Dense(d) => out.extend([d.weights.as_mut_slice(), d.bias.as_mut_slice()]),
                _ => {}
            }
        }
        out
    }

    /// Index of the first dropout layer, if any.
    pub fn first_dropout(&self) -> Option<usize> {
        self.layers.iter().position(|l| matches!(l, Layer::Dropout { .. }))
    }

    /// Index of the last convolution layer, if any.
    pub fn last_conv(&self) -> Option<usize> {
        self.layers.iter().rposition(|l| matches!(l, Layer::Conv(_)))
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor<S>, mode: DropoutMode, rng: &mut R) -> Result<Tensor<S>, NnError> {
        self.forward_range(0..self.layers.len(), x.clone(), mode, rng)
    }

    /// Runs layers `range` only; `x` must be the input of `range.start`.
    pub fn forward_range<R: Rng + ?Sized>(
        &self,
        range: Range<usize>,
        mut x: Tensor<S>,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Tensor<S>, NnError> {
        for layer in &self.layers[range] {
            x = match layer {
                Layer::Conv(c) => c.forward(&x)?,
                Layer::MaxPool(p) => p.forward(&x)?,
                Layer::Relu => x.map(|v| v.max(S::zero())),
                Layer::Dropout { rate } => match dropout_mask::<S, R>(x.len(), *rate, mode, rng) {
                    None => x,
                    Some(mask) => {
                        let mut x = x;
                        x.data_mut().iter_mut().zip(&mask).for_each(|(v, &m)| *v *= m);
                        x
                    }
                },
                Layer::Flatten => {
                    let n = x.len();
                    x.reshape(vec![n])?
                }
                Layer::Dense(d) => Tensor::from_vec(d.forward(x.data())?),
            };
        }
        Ok(x)
    }

    pub fn forward_cached<R: Rng + ?Sized>(
        &self,
        x: &Tensor<S>,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<(Tensor<S>, Vec<LayerCache<S>>), NnError> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = x.clone();
        for layer in &self.layers {
            let (next, cache) = match layer {
                Layer::Conv(c) => {
                    let in_shape = x.chw()?;
                    let (out, cols) = c.forward_cached(&x)?;
                    (out, LayerCache::Conv { cols, in_shape })
                }
                Layer::MaxPool(p) => {
                    let (out, argmax) = p.forward_cached(&x)?;
                    (out, LayerCache::Pool { argmax, in_shape: x.shape().to_vec() })
                }
                Layer::Relu => {
                    let positive = x.data().iter().map(|&v| v > S::zero()).collect();
                    (x.map(|v| v.max(S::zero())), LayerCache::Relu { positive })
                }
                Layer::Dropout { rate } => {
                    let mask = dropout_mask::<S, R>(x.len(), *rate, mode, rng);
                    if let Some(m) = &mask {
                        x.data_mut().iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
                    }
                    (x, LayerCache::Dropout { mask })
                }
                Layer::Flatten => {
                    let in_shape = x.shape().to_vec();
                    let n = x.len();
                    (x.reshape(vec![n])?, LayerCache::Flatten { in_shape })
                }
                Layer::Dense(d) => {
                    let out = d.forward(x.data())?;
                    (Tensor::from_vec(out), LayerCache::Dense { input: x.into_data() })
                }
            };
            caches.push(cache);
            x = next;
        }
        Ok((x, caches))
    }

    /// Back-propagates `grad_out` (gradient of the network output) through
    /// layers `stop..`, accumulating parameter gradients into `grads` when
    /// given. Returns the gradient with respect to the input of layer `stop`
    /// when `want_input` is set.
    pub fn backward(
        &self,
        caches: &[LayerCache<S>],
        grad_out: Vec<S>,
        stop: usize,
        mut grads: Option<&mut Gradients<S>>,
        want_input: bool,
    ) -> Option<Vec<S>> {
        assert_eq!(caches.len(), self.layers.len(), "one cache per layer");
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            offsets.push(acc);
            acc += layer.param_count();
        }
        let mut grad = grad_out;
        for i in (stop..self.layers.len()).rev() {
            let need_input = i > stop || want_input;
            let next = match (&self.layers[i], &caches[i]) {
                (Layer::Conv(c), LayerCache::Conv { cols, in_shape }) => {
                    let mut scratch_w;
                    let mut scratch_b;
                    let (gw, gb) = match grads.as_deref_mut() {
                        Some(g) => {
                            let (w, b) = g.buffers[offsets[i]..].split_at_mut(1);
                            (w[0].as_mut_slice(), b[0].as_mut_slice())
                        }
                        None => {
                            scratch_w = vec![S::zero(); c.weights.len()];
                            scratch_b = vec![S::zero(); c.bias.len()];
                            (scratch_w.as_mut_slice(), scratch_b.as_mut_slice())
                        }
                    };
                    c.backward(cols, *in_shape, &grad, gw, gb, need_input)
                }
                (Layer::MaxPool(_), LayerCache::Pool { argmax, in_shape }) => {
                    Some(MaxPool2d::backward(argmax, in_shape.iter().product(), &grad))
                }
                (Layer::Relu, LayerCache::Relu { positive }) => Some(
                    grad.iter().zip(positive).map(|(&g, &p)| if p { g } else { S::zero() }).collect(),
                ),
                (Layer::Dropout { .. }, LayerCache::Dropout { mask }) => Some(match mask {
                    None => grad,
                    Some(m) => grad.iter().zip(m).map(|(&g, &k)| g * k).collect(),
                }),
                (Layer::Flatten, LayerCache::Flatten { .. }) => Some(grad),
                (Layer::Dense(d), LayerCache::Dense { input }) => {
                    let mut scratch_w;
                    let mut scratch_b;
                    let (gw, gb) = match grads.as_deref_mut() {
                        Some(g) => {
                            let (w, b) = g.buffers[offsets[i]..].split_at_mut(1);
                            (w[0].as_mut_slice(), b[0].as_mut_slice())
                        }
                        None => {
                            scratch_w = vec![S::zero(); d.weights.len()];
                            scratch_b = vec![S::zero(); d.bias.len()];
                            (scratch_w.as_mut_slice(), scratch_b.as_mut_slice())
                        }
                    };
                    d.backward(input, &grad, gw, gb, need_input)
                }
                _ => panic!("cache {i} does not match its layer"),
            };
            match next {
                Some(g) => grad = g,
                None => return None,
            }
        }
        want_input.then_some(grad)
    }

    /// Mean cross-entropy and its parameter gradient over `batch`.
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        batch: &[(&Tensor<S>, usize)],
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<(f64, Gradients<S>), NnError> {
        let mut grads = Gradients::zeros(&self.param_shapes());
        let mut total = 0.0;
        for &(x, label) in batch {
            let (logits, caches) = self.forward_cached(x, mode, rng)?;
            if !logits.is_finite() {
                return Err(NnError::NonFinite("forward pass"));
            }
            let (loss, grad) = softmax_cross_entropy(logits.data(), label)?;
            total += loss;
            self.backward(&caches, grad, 0, Some(&mut grads), false);
        }
        let n = batch.len().max(1);
        grads.scale(S::one() / S::of_usize(n));
        if !grads.is_finite() {
            return Err(NnError::NonFinite("backward pass"));
        }
        Ok((total / n as f64, grads))
    }
}

/// One shuffled pass over `data` in mini-batches (the last one may be
/// short), with dropout in training mode and an Adam step per batch.
/// Returns the mean training loss over the epoch.
pub fn train_epoch<S: Scalar, R1: Rng + ?Sized, R2: Rng + ?Sized>(
    net: &mut Network<S>,
    adam: &mut AdamState<S>,
    data: &[(Tensor<S>, usize)],
    batch_size: usize,
    shuffle_rng: &mut R1,
    dropout_rng: &mut R2,
) -> Result<f64, NnError> {
    if batch_size == 0 {
        return Err(NnError::InvalidConfig("batch size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(shuffle_rng);
    let mut total = 0.0;
    for chunk in order.chunks(batch_size) {
        let batch: Vec<(&Tensor<S>, usize)> = chunk.iter().map(|&i| (&data[i].0, data[i].1)).collect();
        let (loss, grads) = net.loss_and_gradients(&batch, DropoutMode::Train, dropout_rng)?;
        total += loss * chunk.len() as f64;
        adam_step(&mut net.params_mut(), &grads.buffers, adam);
    }
    Ok(if data.is_empty() { 0.0 } else { total / data.len() as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::AdamConfig;
    use crate::rng;

    fn tiny_net(seed: u64, rate: f64) -> Network<f64> {
        let mut r = rng::from_seed(seed);
        Network::new(
            vec![1, 10, 10],
            vec![
                Layer::Conv(Conv2d::init(1, 3, 3, &mut r).unwrap()),
                Layer::MaxPool(MaxPool2d::new(2).unwrap()),
                Layer::Relu,
                Layer::Dropout { rate },
                Layer::Conv(Conv2d::init(3, 2, 2, &mut r).unwrap()),
                Layer::MaxPool(MaxPool2d::new(2).unwrap()),
                Layer::Relu,
                Layer::Flatten,
                Layer::Dense(Dense::init(8, 4, &mut r).unwrap()),
                Layer::Relu,
                Layer::Dropout { rate },
                Layer::Dense(Dense::init(4, 2, &mut r).unwrap()),
            ],
        )
        .unwrap()
    }

    fn random_image(seed: u64) -> Tensor<f64> {
        let mut r = rng::from_seed(seed);
        Tensor::new(vec![1, 10, 10], (0..100).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn shape_validation() {
        let net = tiny_net(1, 0.1);
        let shapes = net.shapes().unwrap();
        assert_eq!(shapes[1], vec![3, 8, 8]);
        assert_eq!(shapes[5], vec![2, 3, 3]);
        assert_eq!(shapes[6], vec![2, 2, 2]);
        assert_eq!(net.output_len(), 2);
        assert!(Network::<f64>::new(vec![1, 4, 4], vec![Layer::Flatten, Layer::Dense(Dense::zeros(5, 2).unwrap())]).is_err());
    }

    #[test]
    fn off_mode_is_deterministic() {
        let net = tiny_net(2, 0.5);
        let x = random_image(3);
        let a = net.forward(&x, DropoutMode::Off, &mut rng::from_seed(1)).unwrap();
        let b = net.forward(&x, DropoutMode::Off, &mut rng::from_seed(2)).unwrap();
        assert_eq!(a, b);
        let upto = net.first_dropout().unwrap() + 1;
        let c = net.forward_range(0..upto, x.clone(), DropoutMode::McInference, &mut rng::from_seed(1)).unwrap();
        let d = net.forward_range(0..upto, x.clone(), DropoutMode::McInference, &mut rng::from_seed(2)).unwrap();
        assert_ne!(c, d);
    }

    #[test]
    fn cached_and_plain_forward_agree() {
        let net = tiny_net(2, 0.3);
        let x = random_image(5);
        let a = net.forward(&x, DropoutMode::Train, &mut rng::from_seed(9)).unwrap();
        let (b, _) = net.forward_cached(&x, DropoutMode::Train, &mut rng::from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let mut net = tiny_net(4, 0.1);
        let before = net.clone();
        let mut adam = AdamState::new(AdamConfig { learning_rate: 0.0, ..Default::default() }, &net.param_shapes());
        let data: Vec<_> = (0..5).map(|i| (random_image(i), (i % 2) as usize)).collect();
        train_epoch(&mut net, &mut adam, &data, 2, &mut rng::from_seed(1), &mut rng::from_seed(2)).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<_> = (0..6).map(|i| (random_image(10 + i), (i % 2) as usize)).collect();
        let run = || {
            let mut net = tiny_net(4, 0.2);
            let mut adam = AdamState::new(AdamConfig::default(), &net.param_shapes());
            let (mut s, mut d) = (rng::from_seed(1), rng::from_seed(2));
            for _ in 0..3 {
                train_epoch(&mut net, &mut adam, &data, 4, &mut s, &mut d).unwrap();
            }
            net
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn overfits_one_sample() {
        let mut net = tiny_net(6, 0.0);
        let mut adam = AdamState::new(AdamConfig { learning_rate: 0.01, ..Default::default() }, &net.param_shapes());
        let data = vec![(random_image(42), 1usize)];
        let (mut s, mut d) = (rng::from_seed(1), rng::from_seed(2));
        let losses: Vec<f64> = (0..50)
            .map(|_| train_epoch(&mut net, &mut adam, &data, 1, &mut s, &mut d).unwrap())
            .collect();
        for w in losses[5..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{losses:?}");
        }
        assert!(*losses.last().unwrap() < 0.01, "{losses:?}");
    }
}

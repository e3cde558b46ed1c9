//! Bispectrum-image convolutional classifier with Monte-Carlo dropout.
//!
//! Layer order per conv block: conv -> max-pool -> ReLU -> dropout; then
//! flatten -> dense -> ReLU -> dropout -> dense logits. With
//! [`DropoutPlacement::DenseOnly`] the conv-block dropout layers are omitted.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::nn::{
    softmax, train_epoch, AdamConfig, AdamState, Conv2d, Dense, DropoutMode, Layer, MaxPool2d, Network, Tensor,
};
use crate::rng::{self, Prng};
use crate::scalar::Scalar;
use crate::spectra::BispectrumImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvBlock {
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropoutPlacement {
    /// After every conv block and after the hidden dense layer.
    All,
    /// After the hidden dense layer only.
    DenseOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BcnnConfig {
    pub conv_blocks: Vec<ConvBlock>,
    pub dense_units: usize,
    pub classes: usize,
    pub dropout_rate: f64,
    pub dropout_placement: DropoutPlacement,
    pub epochs: usize,
    pub batch_size: usize,
    pub ensemble_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for BcnnConfig {
    fn default() -> Self {
        Self {
            conv_blocks: vec![
                ConvBlock { filters: 32, kernel: 3, pool: 3 },
                ConvBlock { filters: 32, kernel: 5, pool: 4 },
            ],
            dense_units: 8,
            classes: 2,
            dropout_rate: 0.1,
            dropout_placement: DropoutPlacement::All,
            epochs: 20,
            batch_size: 8,
            ensemble_size: 100,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl BcnnConfig {
    /// Settings for the seven-class device experiment: 32 dense units,
    /// two epochs, batches of 128.
    pub fn multiclass(classes: usize) -> Self {
        Self { classes, dense_units: 32, epochs: 2, batch_size: 128, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if self.classes < 2 {
            return bad("need at least 2 classes");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must lie in [0, 1)");
        }
        if self.ensemble_size == 0 {
            return bad("ensemble size must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.dense_units == 0 {
            return bad("dense units must be at least 1");
        }
        if self
            .conv_blocks
            .iter()
            .any(|b| b.filters == 0 || b.kernel == 0 || b.pool == 0)
        {
            return bad("conv block dimensions must be positive");
        }
        Ok(())
    }
}

/// `R x K` ensemble of class-probability vectors and their column mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub samples: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl PredictiveDistribution {
    pub fn from_samples(samples: Vec<Vec<f64>>) -> Self {
        // Averaging offsets from the first member keeps the mean exact when
        // all members agree, so a deterministic ensemble has zero variance.
        let origin = samples.first().cloned().unwrap_or_default();
        let r = samples.len().max(1) as f64;
        let mut offset = vec![0.0; origin.len()];
        for s in &samples {
            for ((o, p), base) in offset.iter_mut().zip(s).zip(&origin) {
                *o += p - base;
            }
        }
        let mean = origin.iter().zip(&offset).map(|(b, o)| b + o / r).collect();
        Self { samples, mean }
    }

    /// Binary: class 1 iff its mean probability is at least 0.5. Otherwise
    /// the argmax of the mean (first index on ties).
    pub fn decision(&self) -> usize {
        if self.mean.len() == 2 {
            return usize::from(self.mean[1] >= 0.5);
        }
        self.mean
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }

    /// Per-class sample variance (1/R) across the ensemble.
    pub fn variance(&self) -> Vec<f64> {
        let r = self.samples.len().max(1) as f64;
        self.mean
            .iter()
            .enumerate()
            .map(|(c, m)| self.samples.iter().map(|s| (s[c] - m).powi(2)).sum::<f64>() / r)
            .collect()
    }
}

/// Grad-CAM heatmap on the input grid, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub size: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bcnn<S = f64> {
    pub config: BcnnConfig,
    pub network: Network<S>,
    pub adam: AdamState<S>,
    pub loss_history: Vec<f64>,
}

impl<S: Scalar> Bcnn<S> {
    /// Builds the network for `image_size x image_size` inputs with weights
    /// drawn from the `init` stream of `config.seed`.
    pub fn build(config: BcnnConfig, image_size: usize) -> Result<Self, NnError> {
        config.validate()?;
        let mut r = rng::stream(config.seed, "init");
        let rate = config.dropout_rate;
        let mut layers = Vec::new();
        let mut shape = [1usize, image_size, image_size];
        for block in &config.conv_blocks {
            let conv = Conv2d::init(shape[0], block.filters, block.kernel, &mut r)?;
            let pool = MaxPool2d::new(block.pool)?;
            shape = conv.output_shape(shape).map_err(|_| NnError::ImageTooSmall { size: image_size })?;
            shape = pool.output_shape(shape);
            layers.push(Layer::Conv(conv));
            layers.push(Layer::MaxPool(pool));
            layers.push(Layer::Relu);
            if config.dropout_placement == DropoutPlacement::All {
                layers.push(Layer::Dropout { rate });
            }
        }
        let flat: usize = shape.iter().product();
        layers.push(Layer::Flatten);
        layers.push(Layer::Dense(Dense::init(flat, config.dense_units, &mut r)?));
        layers.push(Layer::Relu);
        layers.push(Layer::Dropout { rate });
        layers.push(Layer::Dense(Dense::init(config.dense_units, config.classes, &mut r)?));
        let network = Network::new(vec![1, image_size, image_size], layers)?;
        Ok(Self::from_network(config, network))
    }

    /// Wraps a hand-assembled network.
    pub fn from_network(config: BcnnConfig, network: Network<S>) -> Self {
        let adam = AdamState::new(config.adam, &network.param_shapes());
        Self { config, network, adam, loss_history: Vec::new() }
    }

    pub fn image_size(&self) -> usize {
        self.network.input_shape()[1]
    }

    fn to_tensor(&self, image: &BispectrumImage<S>) -> Result<Tensor<S>, NnError> {
        let t = self.image_size();
        if image.size() != t {
            return Err(NnError::ShapeMismatch(format!("model expects {t}x{t} images, got {0}x{0}", image.size())));
        }
        Tensor::new(vec![1, t, t], image.as_slice().to_vec())
    }

    /// Trains for `config.epochs` epochs on standardized images.
    pub fn fit(&mut self, train: &[(BispectrumImage<S>, usize)]) -> Result<(), NnError> {
        let data = train
            .iter()
            .map(|(img, label)| {
                if *label >= self.config.classes {
                    return Err(NnError::LabelOutOfRange { label: *label, classes: self.config.classes });
                }
                Ok((self.to_tensor(img)?, *label))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut shuffle = rng::stream(self.config.seed, "shuffle");
        let mut dropout = rng::stream(self.config.seed, "dropout");
        for epoch in 0..self.config.epochs {
            let loss = train_epoch(
                &mut self.network,
                &mut self.adam,
                &data,
                self.config.batch_size,
                &mut shuffle,
                &mut dropout,
            )?;
            log::debug!("epoch {} loss {loss:.5}", epoch + 1);
            self.loss_history.push(loss);
        }
        Ok(())
    }

    /// Class probabilities from one deterministic (dropout-off) pass.
    pub fn predict(&self, image: &BispectrumImage<S>) -> Result<Vec<f64>, NnError> {
        let x = self.to_tensor(image)?;
        let logits = self.network.forward(&x, DropoutMode::Off, &mut rng::from_seed(0))?;
        Ok(softmax(logits.data()).into_iter().map(Scalar::as_f64).collect())
    }

    /// `samples` stochastic passes with dropout active at prediction time.
    /// Layers before the first dropout layer are deterministic and run once.
    pub fn predict_mc<R: Rng + ?Sized>(
        &self,
        image: &BispectrumImage<S>,
        samples: usize,
        rng: &mut R,
    ) -> Result<PredictiveDistribution, NnError> {
        let x = self.to_tensor(image)?;
        let depth = self.network.layers().len();
        let split = self.network.first_dropout().unwrap_or(depth);
        let prefix = self.network.forward_range(0..split, x, DropoutMode::Off, rng)?;
        let rows = (0..samples.max(1))
            .map(|_| {
                let logits = self.network.forward_range(split..depth, prefix.clone(), DropoutMode::McInference, rng)?;
                Ok(softmax(logits.data()).into_iter().map(Scalar::as_f64).collect())
            })
            .collect::<Result<Vec<Vec<f64>>, NnError>>()?;
        Ok(PredictiveDistribution::from_samples(rows))
    }

    /// [`Bcnn::predict_mc`] over many images; image `i` draws its masks from
    /// child stream `i` of the `mc` stream of `seed`.
    pub fn predict_mc_batch(
        &self,
        images: &[BispectrumImage<S>],
        samples: usize,
        seed: u64,
    ) -> Result<Vec<PredictiveDistribution>, NnError> {
        let base = rng::derive_seed(seed, "mc");
        images
            .iter()
            .enumerate()
            .map(|(i, img)| {
                let mut r: Prng = rng::from_seed(rng::child_seed(base, i as u64));
                self.predict_mc(img, samples, &mut r)
            })
            .collect()
    }

    /// Gradient-weighted class activation map of the last conv layer for
    /// the pre-softmax score of `class`, upsampled to the input grid.
    pub fn grad_cam(&self, image: &BispectrumImage<S>, class: usize) -> Result<Heatmap, NnError> {
        if class >= self.config.classes {
            return Err(NnError::LabelOutOfRange { label: class, classes: self.config.classes });
        }
        let target = self
            .network
            .last_conv()
            .ok_or_else(|| NnError::InvalidConfig("network has no conv layer".into()))?;
        let x = self.to_tensor(image)?;
        let mut r = rng::from_seed(0);
        let (logits, caches) = self.network.forward_cached(&x, DropoutMode::Off, &mut r)?;
        let features = self.network.forward_range(0..target + 1, x, DropoutMode::Off, &mut r)?;
        let mut onehot = vec![S::zero(); logits.len()];
        onehot[class] = S::one();
        let grad = self
            .network
            .backward(&caches, onehot, target + 1, None, true)
            .expect("input gradient requested");
        let (filters, h, w) = (features.shape()[0], features.shape()[1], features.shape()[2]);
        let plane = h * w;
        let mut cam = vec![0.0f64; plane];
        for f in 0..filters {
            let g = &grad[f * plane..(f + 1) * plane];
            let weight = g.iter().map(|v| v.as_f64()).sum::<f64>() / plane as f64;
            if weight == 0.0 {
                continue;
            }
            for (c, a) in cam.iter_mut().zip(&features.data()[f * plane..(f + 1) * plane]) {
                *c += weight * a.as_f64();
            }
        }
        cam.iter_mut().for_each(|c| *c = c.max(0.0));
        let size = self.image_size();
        let mut values = bilinear_resize(&cam, h, w, size, size);
        let max = values.iter().copied().fold(0.0f64, f64::max);
        if max > 0.0 {
            values.iter_mut().for_each(|v| *v /= max);
        }
        Ok(Heatmap { size, values })
    }
}

/// Align-corners bilinear resampling of a row-major `h x w` grid.
pub fn bilinear_resize(src: &[f64], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let coord = |i: usize, out: usize, inp: usize| {
        if out <= 1 || inp <= 1 {
            0.0
        } else {
            i as f64 * (inp - 1) as f64 / (out - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(out_h * out_w);
    for i in 0..out_h {
        let y = coord(i, out_h, h);
        let (y0, fy) = (y.floor() as usize, y - y.floor());
        let y1 = (y0 + 1).min(h - 1);
        for j in 0..out_w {
            let x = coord(j, out_w, w);
            let (x0, fx) = (x.floor() as usize, x - x.floor());
            let x1 = (x0 + 1).min(w - 1);
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes_on_100() {
        let model = Bcnn::<f64>::build(BcnnConfig::default(), 100).unwrap();
        let shapes = model.network.shapes().unwrap();
        assert_eq!(shapes[1], vec![32, 98, 98]);
        // ragged 3x3 pooling keeps the partial edge tile: ceil(98 / 3) = 33
        assert_eq!(shapes[2], vec![32, 33, 33]);
        assert_eq!(shapes[5], vec![32, 29, 29]);
        assert_eq!(shapes[6], vec![32, 8, 8]);
        match model.network.layers().last().unwrap() {
            Layer::Dense(d) => assert_eq!((d.units, d.inputs, d.weights.len()), (2, 8, 16)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn build_is_seeded() {
        let cfg = BcnnConfig { seed: 5, ..BcnnConfig::default() };
        assert_eq!(Bcnn::<f64>::build(cfg.clone(), 40).unwrap(), Bcnn::<f64>::build(cfg, 40).unwrap());
    }

    #[test]
    fn rejects_small_images_and_bad_config() {
        assert_eq!(Bcnn::<f64>::build(BcnnConfig::default(), 10), Err(NnError::ImageTooSmall { size: 10 }));
        assert!(Bcnn::<f64>::build(BcnnConfig { classes: 1, ..Default::default() }, 100).is_err());
        assert!(Bcnn::<f64>::build(BcnnConfig { dropout_rate: 1.0, ..Default::default() }, 100).is_err());
        assert!(Bcnn::<f64>::build(BcnnConfig { ensemble_size: 0, ..Default::default() }, 100).is_err());
    }

    #[test]
    fn dense_only_placement() {
        let cfg = BcnnConfig { dropout_placement: DropoutPlacement::DenseOnly, ..Default::default() };
        let model = Bcnn::<f64>::build(cfg, 40).unwrap();
        let drops = model.network.layers().iter().filter(|l| matches!(l, Layer::Dropout { .. })).count();
        assert_eq!(drops, 1);
    }

    #[test]
    fn predictive_distribution_summary() {
        let d = PredictiveDistribution::from_samples(vec![vec![0.2, 0.8], vec![0.6, 0.4]]);
        assert!((d.mean[1] - 0.6).abs() < 1e-15);
        assert_eq!(d.decision(), 1);
        assert!((d.variance()[0] - 0.04).abs() < 1e-15);
        let tie = PredictiveDistribution::from_samples(vec![vec![0.5, 0.5]]);
        assert_eq!(tie.decision(), 1);
        let multi = PredictiveDistribution::from_samples(vec![vec![0.2, 0.5, 0.3]]);
        assert_eq!(multi.decision(), 1);
    }

    #[test]
    fn bilinear_resize_endpoints() {
        let out = bilinear_resize(&[0.0, 1.0, 2.0, 3.0], 2, 2, 3, 3);
        assert_eq!(out, vec![0.0, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 3.0]);
        assert_eq!(bilinear_resize(&[4.0], 1, 1, 2, 2), vec![4.0; 4]);
    }
}

//! Prediction-time dropout ensembles and class activation maps.

use hosa::bcnn::{bilinear_resize, Bcnn, BcnnConfig, ConvBlock};
use hosa::nn::{softmax, Conv2d, Dense, Layer, Network};
use hosa::rng;
use hosa::spectra::BispectrumImage;
use proptest::prelude::*;
use rand::Rng;

fn tiny_config(rate: f64) -> BcnnConfig {
    BcnnConfig {
        conv_blocks: vec![ConvBlock { filters: 3, kernel: 3, pool: 2 }],
        dense_units: 6,
        dropout_rate: rate,
        ensemble_size: 50,
        seed: 4,
        ..BcnnConfig::default()
    }
}

fn random_images(count: usize, size: usize, seed: u64) -> Vec<BispectrumImage<f64>> {
    let mut r = rng::from_seed(seed);
    (0..count)
        .map(|_| BispectrumImage::from_vec(size, (0..size * size).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap())
        .collect()
}

#[test]
fn zero_rate_ensemble_has_no_spread() {
    let model = Bcnn::<f64>::build(tiny_config(0.0), 12).unwrap();
    for d in model.predict_mc_batch(&random_images(5, 12, 1), 50, 2).unwrap() {
        assert!(d.samples.iter().all(|s| s == &d.samples[0]));
        assert!(d.variance().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn positive_rate_ensemble_spreads() {
    let model = Bcnn::<f64>::build(tiny_config(0.1), 12).unwrap();
    let dists = model.predict_mc_batch(&random_images(5, 12, 3), 50, 4).unwrap();
    assert!(dists.iter().any(|d| d.variance().iter().any(|&v| v > 0.0)));
}

#[test]
fn single_member_mean_is_the_sample() {
    let model = Bcnn::<f64>::build(tiny_config(0.1), 12).unwrap();
    let d = model.predict_mc(&random_images(1, 12, 5)[0], 1, &mut rng::from_seed(6)).unwrap();
    assert_eq!(d.mean, d.samples[0]);
}

/// Two hidden units carry opposite votes; dropping one of them swings the
/// prediction to the other side of 0.5.
#[test]
fn two_path_network_is_bimodal() {
    let mut hidden = Dense::zeros(1, 2).unwrap();
    hidden.weights = vec![1.0, 1.0];
    let mut out = Dense::zeros(2, 2).unwrap();
    out.weights = vec![-2.0, 2.0, 2.0, -2.0];
    let network = Network::new(
        vec![1, 1, 1],
        vec![Layer::Flatten, Layer::Dense(hidden), Layer::Relu, Layer::Dropout { rate: 0.5 }, Layer::Dense(out)],
    )
    .unwrap();
    let config = BcnnConfig { conv_blocks: vec![], dropout_rate: 0.5, ..BcnnConfig::default() };
    let model = Bcnn::from_network(config, network);
    let image = BispectrumImage::from_vec(1, vec![1.0]).unwrap();
    let d = model.predict_mc(&image, 400, &mut rng::from_seed(7)).unwrap();
    let high = d.samples.iter().filter(|s| s[1] > 0.9).count();
    let low = d.samples.iter().filter(|s| s[1] < 0.1).count();
    assert!(high > 60 && low > 60, "high {high}, low {low}");
    assert!((d.mean[1] - 0.5).abs() < 0.1);
}

fn single_filter_model(kernel: Vec<f64>, bias: f64, dense_w: f64) -> Bcnn<f64> {
    let mut conv = Conv2d::zeros(1, 1, 3).unwrap();
    conv.weights = kernel;
    conv.bias = vec![bias];
    let mut dense = Dense::zeros(16, 2).unwrap();
    dense.weights = [vec![0.0; 16], vec![dense_w; 16]].concat();
    let network = Network::new(vec![1, 6, 6], vec![Layer::Conv(conv), Layer::Flatten, Layer::Dense(dense)]).unwrap();
    Bcnn::from_network(BcnnConfig::default(), network)
}

#[test]
fn dead_features_give_empty_heatmap() {
    let model = single_filter_model(vec![0.0; 9], 0.0, 1.0);
    let cam = model.grad_cam(&random_images(1, 6, 8)[0], 1).unwrap();
    assert!(cam.values.iter().all(|&v| v == 0.0));
}

#[test]
fn single_filter_heatmap_is_its_rectified_activation() {
    let mut r = rng::from_seed(9);
    let kernel: Vec<f64> = (0..9).map(|_| r.random_range(-1.0..1.0)).collect();
    let model = single_filter_model(kernel.clone(), 0.1, 0.5);
    let image = &random_images(1, 6, 10)[0];
    let x = image.as_slice();
    let mut act = vec![0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.1;
            for a in 0..3 {
                for b in 0..3 {
                    s += kernel[a * 3 + b] * x[(i + a) * 6 + j + b];
                }
            }
            act[i * 4 + j] = s.max(0.0);
        }
    }
    let mut want = bilinear_resize(&act, 4, 4, 6, 6);
    let peak = want.iter().copied().fold(0.0f64, f64::max);
    assert!(peak > 0.0);
    want.iter_mut().for_each(|w| *w /= peak);
    let cam = model.grad_cam(image, 1).unwrap();
    let top = cam.values.iter().copied().fold(0.0f64, f64::max);
    assert!((top - 1.0).abs() < 1e-12);
    for (a, b) in cam.values.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn softmax_ignores_common_shift(z in prop::collection::vec(-20.0f64..20.0, 2..8), c in -50.0f64..50.0) {
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let (a, b) = (softmax(&z), softmax(&shifted));
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}

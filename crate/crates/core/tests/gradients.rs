//! Back-propagation against central finite differences.

use hosa::bcnn::{Bcnn, BcnnConfig, ConvBlock};
use hosa::nn::gradcheck::{check_gradients, GradCheck, Objective};
use hosa::nn::{Conv2d, Dense, DropoutMode, Layer, MaxPool2d, Network, Tensor};
use hosa::rng;
use rand::Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const INSTANCES: u64 = 20;

fn random_tensor(shape: Vec<usize>, r: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn linear_weights(n: usize, r: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

/// Runs `instances` random inputs and linear objectives through `net`.
fn sweep(net: &Network<f64>, mode: DropoutMode, seed: u64) -> GradCheck {
    let mut r = rng::from_seed(seed);
    let mut total = GradCheck { max_rel_error: 0.0, checked: 0, skipped: 0 };
    for i in 0..INSTANCES {
        let x = random_tensor(net.input_shape().to_vec(), &mut r);
        let w = linear_weights(net.output_len(), &mut r);
        let c = check_gradients(net, &x, Objective::Linear(&w), mode, seed + i, H, None, None).unwrap();
        total.max_rel_error = total.max_rel_error.max(c.max_rel_error);
        total.checked += c.checked;
        total.skipped += c.skipped;
    }
    total
}

fn assert_passes(name: &str, c: GradCheck) {
    assert!(c.checked > 0, "{name}: nothing checked");
    assert!(c.max_rel_error < TOL, "{name}: {c:?}");
    assert!(c.skipped * 10 < c.checked, "{name}: too many kinks {c:?}");
}

#[test]
fn conv_layer() {
    let mut r = rng::from_seed(11);
    let conv = Conv2d::init(2, 3, 3, &mut r).unwrap();
    let net = Network::new(vec![2, 6, 5], vec![Layer::Conv(conv)]).unwrap();
    assert_passes("conv", sweep(&net, DropoutMode::Off, 1));
}

#[test]
fn pool_layer_with_ragged_edge() {
    let net = Network::<f64>::new(vec![2, 7, 8], vec![Layer::MaxPool(MaxPool2d::new(3).unwrap())]).unwrap();
    assert_eq!(net.output_len(), 2 * 3 * 3);
    assert_passes("pool", sweep(&net, DropoutMode::Off, 2));
}

#[test]
fn relu_layer() {
    let net = Network::<f64>::new(vec![30], vec![Layer::Relu]).unwrap();
    assert_passes("relu", sweep(&net, DropoutMode::Off, 3));
}

#[test]
fn dense_and_flatten_layers() {
    let mut r = rng::from_seed(4);
    let d = Dense::init(24, 5, &mut r).unwrap();
    let net = Network::new(vec![2, 3, 4], vec![Layer::Flatten, Layer::Dense(d)]).unwrap();
    assert_passes("dense", sweep(&net, DropoutMode::Off, 4));
}

#[test]
fn dropout_layer_with_fixed_mask() {
    let mut r = rng::from_seed(5);
    let d = Dense::init(12, 4, &mut r).unwrap();
    let net = Network::new(vec![12], vec![Layer::Dropout { rate: 0.3 }, Layer::Dense(d)]).unwrap();
    assert_passes("dropout", sweep(&net, DropoutMode::Train, 5));
}

fn small_bcnn() -> Bcnn<f64> {
    let config = BcnnConfig {
        conv_blocks: vec![ConvBlock { filters: 4, kernel: 3, pool: 3 }, ConvBlock { filters: 4, kernel: 5, pool: 4 }],
        seed: 9,
        ..BcnnConfig::default()
    };
    let mut bcnn = Bcnn::build(config, 20).unwrap();
    // Nonzero biases so that the bias gradients are exercised too.
    let mut r = rng::from_seed(10);
    for buf in bcnn.network.params_mut() {
        for v in buf.iter_mut().filter(|v| **v == 0.0) {
            *v = r.random_range(-0.1..0.1);
        }
    }
    bcnn
}

#[test]
fn composed_bcnn_cross_entropy() {
    let bcnn = small_bcnn();
    let mut r = rng::from_seed(12);
    let mut worst = 0.0f64;
    let (mut checked, mut skipped) = (0, 0);
    for i in 0..INSTANCES {
        let x = random_tensor(vec![1, 20, 20], &mut r);
        let label = (i % 2) as usize;
        let c = check_gradients(&bcnn.network, &x, Objective::CrossEntropy(label), DropoutMode::Off, 0, H, None, None)
            .unwrap();
        worst = worst.max(c.max_rel_error);
        checked += c.checked;
        skipped += c.skipped;
    }
    assert_passes("bcnn", GradCheck { max_rel_error: worst, checked, skipped });
}

#[test]
fn composed_bcnn_training_mode_dropout() {
    let bcnn = small_bcnn();
    assert_passes("bcnn/train", sweep(&bcnn.network, DropoutMode::Train, 13));
}

/// The full-size default network, on a subsample of coordinates.
#[test]
fn default_bcnn_subsample() {
    let bcnn = Bcnn::<f64>::build(BcnnConfig::default(), 100).unwrap();
    let net = &bcnn.network;
    let mut r = rng::from_seed(14);
    let shapes = net.param_shapes();
    let coords: Vec<(usize, usize)> = (0..60)
        .map(|i| {
            let b = i % shapes.len();
            (b, r.random_range(0..shapes[b]))
        })
        .collect();
    let inputs: Vec<usize> = (0..30).map(|_| r.random_range(0..100 * 100)).collect();
    let x = random_tensor(vec![1, 100, 100], &mut r);
    let c = check_gradients(net, &x, Objective::CrossEntropy(1), DropoutMode::Off, 0, H, Some(&coords), Some(&inputs))
        .unwrap();
    assert!(c.checked >= 60, "{c:?}");
    assert!(c.max_rel_error < TOL, "{c:?}");
}

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::bcnn::{Bcnn, BcnnConfig, PredictiveDistribution};
use crate::error::Result;
use crate::features::{bispectrum_images, labels, periodogram_features};
use crate::rng;
use crate::scalar::Scalar;
use crate::simprocess::{simulate_dataset_with, ProcessId, SimOptions};
use crate::spectra::{BispectrumImage, PixelScaler};
use crate::ssvs::{SpectralSsvs, SsvsConfig};

/// A pixel scaler fitted on the training images together with the network
/// trained on the scaled images.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedBcnn<S = f64> {
    pub scaler: PixelScaler<S>,
    pub model: Bcnn<S>,
}

impl<S: Scalar> TrainedBcnn<S> {
    /// Fits the scaler and trains a fresh network on raw bispectrum images.
    pub fn fit(images: &[BispectrumImage<S>], labels: &[usize], config: BcnnConfig) -> Result<Self> {
        let scaler = PixelScaler::fit(images)?;
        let train = images
            .iter()
            .zip(labels)
            .map(|(img, &l)| Ok((scaler.apply(img)?, l)))
            .collect::<Result<Vec<_>>>()?;
        let mut model = Bcnn::build(config, scaler.size())?;
        model.fit(&train)?;
        Ok(Self { scaler, model })
    }

    /// MC-dropout predictive distributions of raw images with the model's
    /// configured ensemble size.
    pub fn predict(&self, images: &[BispectrumImage<S>], seed: u64) -> Result<Vec<PredictiveDistribution>> {
        let scaled = images
            .iter()
            .map(|img| self.scaler.apply(img))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.model.predict_mc_batch(&scaled, self.model.config.ensemble_size, seed)?)
    }
}

/// Settings of one simulated two-process comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairConfig {
    pub per_class: usize,
    pub length: usize,
    /// Training series drawn at random from the `2 * per_class`; the rest validate.
    pub train_size: usize,
    pub simulation: SimOptions,
    pub bcnn: BcnnConfig,
    pub ssvs: SsvsConfig,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self {
            per_class: 200,
            length: 100,
            train_size: 200,
            simulation: SimOptions::default(),
            bcnn: BcnnConfig::default(),
            ssvs: SsvsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub pair: (ProcessId, ProcessId),
    pub seed: u64,
    pub bcnn: Metrics,
    pub ssvs: Metrics,
}

impl PairOutcome {
    pub fn name(&self) -> String {
        pair_name(self.pair)
    }
}

pub fn pair_name(pair: (ProcessId, ProcessId)) -> String {
    format!("{}:{}", pair.0.roman(), pair.1.roman())
}

/// Random permutation of `0..n` split into the first `train` indices and
/// the rest, both sorted.
pub fn random_split(n: usize, train: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, "split"));
    let mut a = idx[..train.min(n)].to_vec();
    let mut b = idx[train.min(n)..].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Simulates a labelled pair dataset, splits it at random, and scores the
/// BCNN (MC-dropout mean) and spectral SSVS (model-averaged) on the
/// held-out half. Every random stream derives from `seed`; the seed fields
/// inside `config` are ignored.
pub fn run_pair_experiment<S: Scalar>(
    pair: (ProcessId, ProcessId),
    config: &PairConfig,
    seed: u64,
) -> Result<PairOutcome> {
    let data = simulate_dataset_with(
        pair,
        config.per_class,
        config.length,
        rng::derive_seed(seed, "simulate"),
        &config.simulation,
    )?;
    let y = labels(&data);
    let (train_idx, test_idx) = random_split(data.len(), config.train_size, seed);
    let (y_train, y_test) = (pick(&y, &train_idx), pick(&y, &test_idx));

    let images = bispectrum_images::<S>(&data, None)?;
    let bcnn_config = BcnnConfig { seed: rng::derive_seed(seed, "bcnn"), ..config.bcnn.clone() };
    let started = std::time::Instant::now();
    let trained = TrainedBcnn::fit(&pick(&images, &train_idx), &y_train, bcnn_config)?;
    let dists = trained.predict(&pick(&images, &test_idx), rng::derive_seed(seed, "predict"))?;
    let means: Vec<Vec<f64>> = dists.into_iter().map(|d| d.mean).collect();
    let bcnn = Metrics::from_probabilities(&means, &y_test)?;
    log::info!("{} bcnn accuracy {:.3} ({:.1?})", pair_name(pair), bcnn.accuracy, started.elapsed());

    let pgrams = periodogram_features(&data, None)?;
    let ssvs_config = SsvsConfig { seed: rng::derive_seed(seed, "ssvs"), ..config.ssvs.clone() };
    let model = SpectralSsvs::fit(&pick(&pgrams, &train_idx), &y_train, ssvs_config)?;
    let probs = test_idx
        .iter()
        .map(|&i| model.predict_proba(&pgrams[i]).map(|p| vec![1.0 - p, p]))
        .collect::<Result<Vec<_>, _>>()?;
    let ssvs = Metrics::from_probabilities(&probs, &y_test)?;
    log::info!("{} ssvs accuracy {:.3}", pair_name(pair), ssvs.accuracy);

    Ok(PairOutcome { pair, seed, bcnn, ssvs })
}

/// Seed of one pair within a table run.
pub fn pair_seed(master: u64, pair: (ProcessId, ProcessId)) -> u64 {
    rng::derive_seed(master, &format!("pair/{}", pair_name(pair)))
}

/// Runs every pair in order, each on its own derived seed.
pub fn reproduce_table1<S: Scalar>(
    pairs: &[(ProcessId, ProcessId)],
    config: &PairConfig,
    master_seed: u64,
) -> Result<Vec<PairOutcome>> {
    pairs
        .iter()
        .map(|&p| run_pair_experiment::<S>(p, config, pair_seed(master_seed, p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub method: String,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

pub fn report_rows(outcomes: &[PairOutcome], config_hash: &str) -> Vec<ReportRow> {
    let mut rows = Vec::with_capacity(2 * outcomes.len());
    for o in outcomes {
        for (method, m) in [("bcnn", &o.bcnn), ("ssvs", &o.ssvs)] {
            rows.push(ReportRow {
                experiment: o.name(),
                method: method.to_string(),
                accuracy: m.accuracy,
                auc: m.auc,
                seed: o.seed,
                config_hash: config_hash.to_string(),
            });
        }
    }
    rows
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from("experiment,method,accuracy,auc,seed,config_hash\n");
    for r in rows {
        let auc = r.auc.map(|a| a.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{auc},{},{}\n", r.experiment, r.method, r.accuracy, r.seed, r.config_hash));
    }
    s
}

/// Plain-text table with one row per pair and accuracy/AUC columns for
/// both methods.
pub fn render_table(outcomes: &[PairOutcome]) -> String {
    let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let mut s = format!("{:<12}{:>10}{:>10}{:>10}{:>10}\n", "Pair", "BCNN acc", "BCNN AUC", "SSVS acc", "SSVS AUC");
    for o in outcomes {
        s.push_str(&format!(
            "{:<12}{:>10}{:>10}{:>10}{:>10}\n",
            format!("{} vs {}", o.pair.0.roman(), o.pair.1.roman()),
            fmt(Some(o.bcnn.accuracy)),
            fmt(o.bcnn.auc),
            fmt(Some(o.ssvs.accuracy)),
            fmt(o.ssvs.auc),
        ));
    }
    s
}

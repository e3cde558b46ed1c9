//! Experiment configuration files, manifests, and the generic runner that
//! turns a configuration into metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bcnn::{BcnnConfig, PredictiveDistribution};
use crate::error::{Error, Result};
use crate::eval::{cv_draws, leave_k_out, random_split, CvPlan, Metrics, TrainedBcnn, DEFAULT_RATES};
use crate::features::{bispectrum_images, common_length, labels, periodogram_features};
use crate::io::{ingest_csv, Checkpoint, IngestOptions};
use crate::rng;
use crate::scalar::Scalar;
use crate::series::TimeSeries;
use crate::simprocess::{parse_pair, simulate_dataset_with, SimOptions};
use crate::ssvs::{SpectralSsvs, SsvsConfig};

/// Environment variable naming the directory searched for archive datasets.
pub const DATA_DIR_ENV: &str = "HOSA_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Two simulated processes, e.g. `pair: "I:IV"`.
    Simulated {
        pair: String,
        #[serde(default = "default_per_class")]
        per_class: usize,
        #[serde(default = "default_length")]
        length: usize,
        #[serde(default)]
        simulation: SimOptions,
    },
    /// Label-first text files; without `test` the train file is split.
    Csv {
        train: PathBuf,
        #[serde(default)]
        test: Option<PathBuf>,
        #[serde(default)]
        subset: Option<Vec<i64>>,
    },
    /// Archive layout `<dir>/<name>/<name>_TRAIN.tsv` (or `.txt`, or flat in
    /// `<dir>`); `dir` defaults to `$HOSA_DATA_DIR`.
    Ucr {
        name: String,
        #[serde(default)]
        dir: Option<PathBuf>,
        #[serde(default)]
        subset: Option<Vec<i64>>,
    },
}

fn default_per_class() -> usize {
    200
}

fn default_length() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Bcnn(BcnnConfig),
    Ssvs(SsvsConfig),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Bcnn(_) => "bcnn",
            ModelSpec::Ssvs(_) => "ssvs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EvalProtocol {
    /// Fit on the training part, score the test part. `train_size` applies
    /// when the source has no predefined test set (default: half).
    Holdout {
        #[serde(default)]
        train_size: Option<usize>,
    },
    /// Repeated leave-k-out on the pooled data; BCNN models also search
    /// the dropout `rates`.
    LeaveKOut {
        k: usize,
        iterations: usize,
        #[serde(default = "default_rates")]
        rates: Vec<f64>,
    },
}

fn default_rates() -> Vec<f64> {
    DEFAULT_RATES.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub model: ModelSpec,
    pub protocol: EvalProtocol,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelSpec::Bcnn(c) => c.validate()?,
            ModelSpec::Ssvs(c) => c.prior.validate()?,
        }
        if let EvalProtocol::LeaveKOut { rates, .. } = &self.protocol {
            if rates.is_empty() || rates.iter().any(|r| !(0.0..1.0).contains(r)) {
                return Err(Error::Config("dropout rates must be a nonempty list in [0, 1)".into()));
            }
        }
        if let DatasetSource::Simulated { pair, .. } = &self.dataset {
            parse_pair(pair).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// SHA-256 hex digest of the JSON encoding.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serialises");
    hex::encode(Sha256::digest(bytes))
}

/// Record written next to every set of outputs; together with the stored
/// config it is enough to repeat the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    /// Named random streams and their derived seeds.
    pub streams: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new<T: Serialize>(command: &str, config: &T, master_seed: u64, streams: &[&str]) -> Self {
        let versions = BTreeMap::from([
            ("hosa".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("rng".to_string(), "chacha8".to_string()),
        ]);
        Self {
            command: command.to_string(),
            config_hash: config_hash(config),
            config: serde_json::to_value(config).expect("config serialises"),
            master_seed,
            streams: streams.iter().map(|s| (s.to_string(), rng::derive_seed(master_seed, s))).collect(),
            versions,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(&path, text + "\n").map_err(crate::error::FormatError::from)?;
        Ok(path)
    }
}

/// Train and test series after resolving the dataset source.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: Vec<TimeSeries>,
    pub test: Vec<TimeSeries>,
    /// Original-to-index label map for file sources.
    pub mapping: Vec<(i64, usize)>,
    pub predefined_split: bool,
}

impl LoadedData {
    pub fn all(&self) -> Vec<TimeSeries> {
        self.train.iter().chain(&self.test).cloned().collect()
    }

    pub fn classes(&self) -> usize {
        self.train.iter().chain(&self.test).filter_map(TimeSeries::label).max().map_or(0, |m| m + 1)
    }
}

fn locate_ucr(name: &str, dir: &Option<PathBuf>, part: &str) -> Result<PathBuf> {
    let root = match dir {
        Some(d) => d.clone(),
        None => std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| Error::Config(format!("no dataset dir given and ${DATA_DIR_ENV} is unset")))?,
    };
    let candidates = ["tsv", "txt", "csv"]
        .iter()
        .flat_map(|ext| {
            let file = format!("{name}_{part}.{ext}");
            [root.join(name).join(&file), root.join(&file)]
        })
        .collect::<Vec<_>>();
    candidates
        .iter()
        .find(|p| p.is_file())
        .cloned()
        .ok_or_else(|| Error::Config(format!("{name}_{part} not found under {}", root.display())))
}

fn read_file(path: &Path, subset: &Option<Vec<i64>>) -> Result<(Vec<TimeSeries>, Vec<(i64, usize)>)> {
    if !path.is_file() {
        return Err(Error::Config(format!("{} does not exist", path.display())));
    }
    let d = ingest_csv(path, &IngestOptions { subset: subset.clone() })?;
    Ok((d.series, d.mapping))
}

/// Relabels the test set with the training map so both share indices.
fn align(
    train: (Vec<TimeSeries>, Vec<(i64, usize)>),
    test: (Vec<TimeSeries>, Vec<(i64, usize)>),
) -> Result<LoadedData> {
    let (train, map) = train;
    let (test, test_map) = test;
    let back: BTreeMap<usize, i64> = test_map.iter().map(|&(o, i)| (i, o)).collect();
    let forward: BTreeMap<i64, usize> = map.iter().copied().collect();
    let test = test
        .into_iter()
        .map(|s| {
            let original = back[&s.label().expect("ingested series are labelled")];
            let idx = *forward.get(&original).ok_or_else(|| {
                Error::Format(crate::error::FormatError::Corrupt(format!(
                    "test label {original} does not occur in the training file"
                )))
            })?;
            Ok(s.with_label(idx))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedData { train, test, mapping: map, predefined_split: true })
}

pub fn load_data(config: &ExperimentConfig) -> Result<LoadedData> {
    let holdout_split = |all: Vec<TimeSeries>, mapping| {
        let train_size = match config.protocol {
            EvalProtocol::Holdout { train_size } => train_size.unwrap_or(all.len() / 2),
            EvalProtocol::LeaveKOut { .. } => all.len(),
        };
        let (a, b) = random_split(all.len(), train_size, config.seed);
        LoadedData {
            train: a.iter().map(|&i| all[i].clone()).collect(),
            test: b.iter().map(|&i| all[i].clone()).collect(),
            mapping,
            predefined_split: false,
        }
    };
    match &config.dataset {
        DatasetSource::Simulated { pair, per_class, length, simulation } => {
            let pair = parse_pair(pair).map_err(|e| Error::Config(e.to_string()))?;
            let all = simulate_dataset_with(pair, *per_class, *length, rng::derive_seed(config.seed, "simulate"), simulation)?;
            Ok(holdout_split(all, Vec::new()))
        }
        DatasetSource::Csv { train, test, subset } => {
            let tr = read_file(train, subset)?;
            match test {
                Some(t) => align(tr, read_file(t, subset)?),
                None => Ok(holdout_split(tr.0, tr.1)),
            }
        }
        DatasetSource::Ucr { name, dir, subset } => {
            let tr = read_file(&locate_ucr(name, dir, "TRAIN")?, subset)?;
            let te = read_file(&locate_ucr(name, dir, "TEST")?, subset)?;
            align(tr, te)
        }
    }
}

/// Everything a run produces before it is written to disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome<S = f64> {
    pub metrics: Metrics,
    pub probabilities: Vec<Vec<f64>>,
    pub truth: Vec<usize>,
    /// MC-dropout ensembles of the test series (BCNN holdout only).
    pub distributions: Option<Vec<PredictiveDistribution>>,
    /// Dropout rate picked by the grid search and pooled validation scores.
    pub grid: Option<(f64, Vec<(f64, f64)>)>,
    /// The fitted model (holdout only).
    pub checkpoint: Option<Checkpoint<S>>,
    pub classes: usize,
}

fn ssvs_probs(model: &SpectralSsvs, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| model.predict_proba(r).map(|p| vec![1.0 - p, p]).map_err(Error::from))
        .collect()
}

/// Runs one configured experiment in memory. The class count of a BCNN is
/// taken from the data; the seeds inside the model configuration are
/// replaced by streams of the master seed.
pub fn run_experiment<S: Scalar>(config: &ExperimentConfig) -> Result<ExperimentOutcome<S>> {
    config.validate()?;
    let data = load_data(config)?;
    let classes = data.classes();
    let size = common_length(&data.all());
    let model_seed = rng::derive_seed(config.seed, config.model.name());
    let predict_seed = rng::derive_seed(config.seed, "predict");
    log::info!("{} train / {} test series, {classes} classes, length {size}", data.train.len(), data.test.len());

    match (&config.model, &config.protocol) {
        (ModelSpec::Bcnn(c), EvalProtocol::Holdout { .. }) => {
            let cfg = BcnnConfig { classes, seed: model_seed, ..c.clone() };
            let train = bispectrum_images::<S>(&data.train, Some(size))?;
            let test = bispectrum_images::<S>(&data.test, Some(size))?;
            let trained = TrainedBcnn::fit(&train, &labels(&data.train), cfg)?;
            let dists = trained.predict(&test, predict_seed)?;
            let probabilities: Vec<Vec<f64>> = dists.iter().map(|d| d.mean.clone()).collect();
            let truth = labels(&data.test);
            Ok(ExperimentOutcome {
                metrics: Metrics::from_probabilities(&probabilities, &truth)?,
                probabilities,
                truth,
                distributions: Some(dists),
                grid: None,
                checkpoint: Some(Checkpoint::Bcnn(trained)),
                classes,
            })
        }
        (ModelSpec::Ssvs(c), EvalProtocol::Holdout { .. }) => {
            let cfg = SsvsConfig { seed: model_seed, ..c.clone() };
            let train = periodogram_features(&data.train, Some(size))?;
            let test = periodogram_features(&data.test, Some(size))?;
            let model = SpectralSsvs::fit(&train, &labels(&data.train), cfg)?;
            let probabilities = ssvs_probs(&model, &test)?;
            let truth = labels(&data.test);
            Ok(ExperimentOutcome {
                metrics: Metrics::from_probabilities(&probabilities, &truth)?,
                probabilities,
                truth,
                distributions: None,
                grid: None,
                checkpoint: Some(Checkpoint::Ssvs(model)),
                classes,
            })
        }
        (ModelSpec::Bcnn(c), EvalProtocol::LeaveKOut { k, iterations, rates }) => {
            let all = data.all();
            let cfg = BcnnConfig { classes, ..c.clone() };
            let plan = CvPlan { k: *k, iterations: *iterations, seed: model_seed };
            let images = bispectrum_images::<S>(&all, Some(size))?;
            let report = leave_k_out(&images, &labels(&all), &cfg, &plan, rates)?;
            Ok(ExperimentOutcome {
                metrics: report.test,
                probabilities: report.test_probabilities,
                truth: report.test_truth,
                distributions: None,
                grid: Some((report.chosen_rate, report.validation_accuracy)),
                checkpoint: None,
                classes,
            })
        }
        (ModelSpec::Ssvs(c), EvalProtocol::LeaveKOut { k, iterations, .. }) => {
            let all = data.all();
            let y = labels(&all);
            let rows = periodogram_features(&all, Some(size))?;
            let plan = CvPlan { k: *k, iterations: *iterations, seed: model_seed };
            let mut probabilities = Vec::new();
            let mut truth = Vec::new();
            for (it, draw) in cv_draws(&plan, all.len())?.iter().enumerate() {
                let cfg = SsvsConfig { seed: rng::child_seed(model_seed, it as u64), ..c.clone() };
                let train: Vec<Vec<f64>> = draw.train.iter().map(|&i| rows[i].clone()).collect();
                let yt: Vec<usize> = draw.train.iter().map(|&i| y[i]).collect();
                let model = SpectralSsvs::fit(&train, &yt, cfg)?;
                let test: Vec<Vec<f64>> = draw.test.iter().map(|&i| rows[i].clone()).collect();
                probabilities.extend(ssvs_probs(&model, &test)?);
                truth.extend(draw.test.iter().map(|&i| y[i]));
            }
            Ok(ExperimentOutcome {
                metrics: Metrics::from_probabilities(&probabilities, &truth)?,
                probabilities,
                truth,
                distributions: None,
                grid: None,
                checkpoint: None,
                classes,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "dataset": {"kind": "simulated", "pair": "I:IV", "per_class": 10, "length": 16},
        "model": {"kind": "ssvs", "components": 3, "iterations": 60, "burn_in": 10},
        "protocol": {"kind": "holdout"},
        "seed": 4
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_json(EXAMPLE).unwrap();
        assert_eq!(c.precision, Precision::F64);
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(config_hash(&c), config_hash(&c.clone()));
        assert_eq!(config_hash(&c).len(), 64);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let typo = EXAMPLE.replace("\"seed\"", "\"sed\"");
        assert!(matches!(ExperimentConfig::from_json(&typo), Err(Error::Config(_))));
        let inner = EXAMPLE.replace("\"burn_in\"", "\"burnin\"");
        assert!(ExperimentConfig::from_json(&inner).is_err());
    }

    #[test]
    fn simulated_ssvs_holdout_runs() {
        let c = ExperimentConfig::from_json(EXAMPLE).unwrap();
        let out = run_experiment::<f64>(&c).unwrap();
        assert_eq!(out.metrics.n, 10);
        assert_eq!(out.classes, 2);
        let again = run_experiment::<f64>(&c).unwrap();
        assert_eq!(out.probabilities, again.probabilities);
        assert!(out.probabilities.iter().all(|p| p[1] > 0.0 && p[1] < 1.0));
    }

    #[test]
    fn missing_files_are_config_errors() {
        let mut c = ExperimentConfig::from_json(EXAMPLE).unwrap();
        c.dataset = DatasetSource::Csv { train: "/nonexistent/x.csv".into(), test: None, subset: None };
        assert!(matches!(load_data(&c), Err(Error::Config(_))));
        c.dataset = DatasetSource::Ucr { name: "Nope".into(), dir: Some("/nonexistent".into()), subset: None };
        assert!(matches!(load_data(&c), Err(Error::Config(_))));
    }

    #[test]
    fn predefined_split_shares_label_map() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("D_TRAIN.tsv"), "4\t1\t2\t3\n9\t0\t1\t0\n4\t2\t2\t1\n").unwrap();
        std::fs::write(dir.path().join("D_TEST.tsv"), "9\t1\t1\t1\n").unwrap();
        let mut c = ExperimentConfig::from_json(EXAMPLE).unwrap();
        c.dataset = DatasetSource::Ucr { name: "D".into(), dir: Some(dir.path().into()), subset: None };
        let d = load_data(&c).unwrap();
        assert!(d.predefined_split);
        assert_eq!(d.mapping, vec![(4, 0), (9, 1)]);
        assert_eq!(d.test[0].label(), Some(1));
    }
}

use std::path::{Path, PathBuf};

use serde::Serialize;

use hosa::bcnn::{BcnnConfig, PredictiveDistribution};
use hosa::config::{
    config_hash, load_data, run_experiment, DatasetSource, EvalProtocol, ExperimentConfig, ExperimentOutcome,
    Manifest, ModelSpec, Precision,
};
use hosa::eval::{
    class_probability_densities, decide, densities_csv, majority_baseline, pair_seed, render_table, report_csv,
    report_rows, run_pair_experiment, Metrics, PairConfig, PairOutcome, ReportRow, TrainedBcnn,
};
use hosa::features::{bispectrum_images, periodogram_features};
use hosa::io::{
    distributions_csv, grid_csv, ingest_csv, write_dataset, write_overlay_png, write_pgm, Checkpoint, FeatureKind,
    FeatureSet, IngestOptions,
};
use hosa::rng::derive_seed;
use hosa::simprocess::{all_pairs, parse_pair, simulate_dataset_with, ProcessId, SimOptions};
use hosa::spectra::BispectrumImage;
use hosa::ssvs::{SpectralSsvs, SsvsConfig};
use hosa::{Error, Scalar};

use crate::{
    CamArgs, CliError, DevicesArgs, EvaluateArgs, FeaturizeArgs, KindArg, ModelArg, PrecisionArg, RunArgs,
    SimulateArgs, Table1Args, TrainArgs,
};

type CliResult<T = ()> = Result<T, CliError>;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    std::fs::write(path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(manifest: &Manifest, path: &Path) -> CliResult {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    write_file(path, text + "\n")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn simulate(a: SimulateArgs) -> CliResult {
    let pair = parse_pair(&a.pair).map_err(|e| CliError::config(e.to_string()))?;
    let options = SimOptions { burn_in: a.burn_in, setar_noise_sd: a.setar_sd, ..SimOptions::default() };
    let data = simulate_dataset_with(pair, a.n_per_class, a.length, derive_seed(a.seed, "simulate"), &options)?;
    match &a.out {
        None => write_dataset(std::io::stdout().lock(), &data)?,
        Some(path) => {
            let mut buf = Vec::new();
            write_dataset(&mut buf, &data)?;
            write_file(path, buf)?;
            let settings = serde_json::json!({
                "pair": a.pair, "n_per_class": a.n_per_class, "length": a.length, "simulation": options,
            });
            let mut m = Manifest::new("simulate", &settings, a.seed, &["simulate"]);
            m.outputs.push(path.display().to_string());
            write_manifest(&m, &sidecar(path))?;
        }
    }
    Ok(())
}

pub fn featurize(a: FeaturizeArgs) -> CliResult {
    let data = ingest_csv(&a.input, &IngestOptions { subset: a.subset.clone() })?;
    let labels: Vec<Option<usize>> = data.series.iter().map(|s| s.label()).collect();
    let set = match a.kind {
        KindArg::Bispectrum => {
            let rows: Vec<Vec<f64>> = match a.precision {
                PrecisionArg::F64 => bispectrum_images::<f64>(&data.series, a.size)?.into_iter().map(|i| i.into_vec()).collect(),
                PrecisionArg::F32 => bispectrum_images::<f32>(&data.series, a.size)?
                    .into_iter()
                    .map(|i| i.into_vec().into_iter().map(f64::from).collect())
                    .collect(),
            };
            let size = rows.first().map_or(0, |r| (r.len() as f64).sqrt() as usize);
            FeatureSet::new(FeatureKind::Bispectrum, size, size, labels, rows)?
        }
        KindArg::Periodogram => {
            let rows = periodogram_features(&data.series, a.size)?;
            let width = rows.first().map_or(0, Vec::len);
            FeatureSet::new(FeatureKind::Periodogram, 1, width, labels, rows)?
        }
    };
    set.save(&a.out)?;
    let settings = serde_json::json!({
        "input": a.input, "kind": set.kind, "size": a.size, "subset": a.subset,
        "label_map": data.mapping, "precision": format!("{:?}", a.precision).to_lowercase(),
    });
    let mut m = Manifest::new("featurize", &settings, 0, &[]);
    m.outputs.push(a.out.display().to_string());
    write_manifest(&m, &sidecar(&a.out))
}

fn images_of<S: Scalar>(set: &FeatureSet) -> CliResult<Vec<BispectrumImage<S>>> {
    if set.kind != FeatureKind::Bispectrum || set.height != set.width {
        return Err(CliError::config("the BCNN needs a bispectrum feature file"));
    }
    set.rows
        .iter()
        .map(|r| Ok(BispectrumImage::from_vec(set.height, r.iter().map(|&v| S::of(v)).collect())?))
        .collect()
}

fn need_periodograms(set: &FeatureSet) -> CliResult {
    if set.kind != FeatureKind::Periodogram {
        return Err(CliError::config("SSVS needs a periodogram feature file"));
    }
    Ok(())
}

fn need_labels(set: &FeatureSet) -> CliResult<Vec<usize>> {
    if set.labels.iter().any(Option::is_none) {
        return Err(CliError::data("feature file has unlabelled rows"));
    }
    Ok(set.class_labels())
}

fn train_bcnn<S: Scalar>(set: &FeatureSet, config: BcnnConfig, out: &Path) -> CliResult {
    let images = images_of::<S>(set)?;
    let labels = need_labels(set)?;
    let trained = TrainedBcnn::fit(&images, &labels, config)?;
    Checkpoint::Bcnn(trained).save(out)?;
    Ok(())
}

pub fn train(a: TrainArgs) -> CliResult {
    let set = FeatureSet::load(&a.features)?;
    let (settings, streams) = match a.model {
        ModelArg::Bcnn => {
            let mut c: BcnnConfig = match &a.params {
                Some(p) => read_json(p)?,
                None => BcnnConfig::default(),
            };
            c.classes = set.class_labels().into_iter().max().map_or(2, |m| (m + 1).max(2));
            c.seed = derive_seed(a.seed, "bcnn");
            if let Some(e) = a.epochs {
                c.epochs = e;
            }
            if let Some(d) = a.dropout {
                c.dropout_rate = d;
            }
            if let Some(r) = a.ensemble_size {
                c.ensemble_size = r;
            }
            match a.precision {
                PrecisionArg::F64 => train_bcnn::<f64>(&set, c.clone(), &a.out)?,
                PrecisionArg::F32 => train_bcnn::<f32>(&set, c.clone(), &a.out)?,
            }
            (serde_json::to_value(&c).expect("serialises"), ["bcnn"])
        }
        ModelArg::Ssvs => {
            need_periodograms(&set)?;
            let mut c: SsvsConfig = match &a.params {
                Some(p) => read_json(p)?,
                None => SsvsConfig::default(),
            };
            c.seed = derive_seed(a.seed, "ssvs");
            let model = SpectralSsvs::fit(&set.rows, &need_labels(&set)?, c.clone())?;
            Checkpoint::<f64>::Ssvs(model).save(&a.out)?;
            (serde_json::to_value(&c).expect("serialises"), ["ssvs"])
        }
    };
    let settings = serde_json::json!({ "features": a.features, "model": settings });
    let mut m = Manifest::new("train", &settings, a.seed, &streams);
    m.outputs.push(a.out.display().to_string());
    write_manifest(&m, &sidecar(&a.out))
}

/// A checkpoint in whichever precision it was saved with.
enum AnyCheckpoint {
    F64(Checkpoint<f64>),
    F32(Checkpoint<f32>),
}

fn load_checkpoint(path: &Path) -> CliResult<AnyCheckpoint> {
    match Checkpoint::<f64>::load(path) {
        Ok(c) => Ok(AnyCheckpoint::F64(c)),
        Err(Error::Config(_)) => Ok(AnyCheckpoint::F32(Checkpoint::<f32>::load(path)?)),
        Err(e) => Err(e.into()),
    }
}

/// Class probabilities and, for the BCNN, the MC ensembles behind them.
fn predict_with<S: Scalar>(
    ckpt: &Checkpoint<S>,
    set: &FeatureSet,
    seed: u64,
) -> CliResult<(Vec<Vec<f64>>, Option<Vec<PredictiveDistribution>>)> {
    match ckpt {
        Checkpoint::Bcnn(t) => {
            let dists = t.predict(&images_of::<S>(set)?, derive_seed(seed, "predict"))?;
            Ok((dists.iter().map(|d| d.mean.clone()).collect(), Some(dists)))
        }
        Checkpoint::Ssvs(m) => {
            need_periodograms(set)?;
            let probs = set
                .rows
                .iter()
                .map(|r| m.predict_proba(r).map(|p| vec![1.0 - p, p]))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((probs, None))
        }
    }
}

fn predictions_csv(probs: &[Vec<f64>], truth: &[usize]) -> String {
    let k = probs.first().map_or(0, Vec::len);
    let mut s = String::from("index,truth,predicted");
    (0..k).for_each(|c| s.push_str(&format!(",p{c}")));
    s.push('\n');
    for (i, (p, t)) in probs.iter().zip(truth).enumerate() {
        s.push_str(&format!("{i},{t},{}", decide(p)));
        p.iter().for_each(|v| s.push_str(&format!(",{v}")));
        s.push('\n');
    }
    s
}

fn metrics_json(m: &Metrics) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialise") + "\n"
}

/// Writes metrics, predictions, densities and ensembles; returns file names.
fn write_predictions(
    dir: &Path,
    prefix: &str,
    metrics: &Metrics,
    probs: &[Vec<f64>],
    truth: &[usize],
    dists: Option<&[PredictiveDistribution]>,
) -> CliResult<Vec<String>> {
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> CliResult {
        write_file(&dir.join(&name), body)?;
        written.push(name);
        Ok(())
    };
    put(format!("{prefix}metrics.json"), metrics_json(metrics))?;
    put(format!("{prefix}predictions.csv"), predictions_csv(probs, truth))?;
    put(format!("{prefix}densities.csv"), densities_csv(&class_probability_densities(probs, truth)?))?;
    if let Some(d) = dists {
        put(format!("{prefix}distributions.csv"), distributions_csv(d))?;
    }
    Ok(written)
}

pub fn evaluate(a: EvaluateArgs) -> CliResult {
    let set = FeatureSet::load(&a.features)?;
    let truth = need_labels(&set)?;
    let (probs, dists) = match load_checkpoint(&a.checkpoint)? {
        AnyCheckpoint::F64(c) => predict_with(&c, &set, a.seed)?,
        AnyCheckpoint::F32(c) => predict_with(&c, &set, a.seed)?,
    };
    let metrics = Metrics::from_probabilities(&probs, &truth)?;
    make_dir(&a.out_dir)?;
    let outputs = write_predictions(&a.out_dir, "", &metrics, &probs, &truth, dists.as_deref())?;
    let settings = serde_json::json!({ "checkpoint": a.checkpoint, "features": a.features });
    let mut m = Manifest::new("evaluate", &settings, a.seed, &["predict"]);
    m.outputs = outputs;
    write_manifest(&m, &a.out_dir.join("manifest.json"))?;
    print!("{}", metrics_json(&metrics));
    Ok(())
}

fn cam_with<S: Scalar>(ckpt: &Checkpoint<S>, set: &FeatureSet, a: &CamArgs) -> CliResult<serde_json::Value> {
    let Checkpoint::Bcnn(t) = ckpt else {
        return Err(CliError::config("class activation maps need a BCNN checkpoint"));
    };
    let images = images_of::<S>(set)?;
    let image = images
        .get(a.index)
        .ok_or_else(|| CliError::config(format!("index {} out of range ({} rows)", a.index, images.len())))?;
    let scaled = t.scaler.apply(image)?;
    let class = match a.class {
        Some(c) => c,
        None => decide(&t.model.predict(&scaled)?),
    };
    let heat = t.model.grad_cam(&scaled, class)?;
    let raw: Vec<f64> = image.as_slice().iter().map(|v| v.as_f64()).collect();
    write_file(&a.out_dir.join("heatmap.csv"), grid_csv(&heat.values, heat.size))?;
    write_pgm(&a.out_dir.join("heatmap.pgm"), &heat.values, heat.size)?;
    write_overlay_png(&a.out_dir.join("overlay.png"), &raw, &heat.values, heat.size)?;
    let peak = heat
        .values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0;
    Ok(serde_json::json!({
        "index": a.index,
        "class": class,
        "peak": [peak / heat.size, peak % heat.size],
    }))
}

pub fn cam(a: CamArgs) -> CliResult {
    let set = FeatureSet::load(&a.features)?;
    make_dir(&a.out_dir)?;
    let summary = match load_checkpoint(&a.checkpoint)? {
        AnyCheckpoint::F64(c) => cam_with(&c, &set, &a)?,
        AnyCheckpoint::F32(c) => cam_with(&c, &set, &a)?,
    };
    let settings = serde_json::json!({ "checkpoint": a.checkpoint, "features": a.features, "cam": summary });
    let mut m = Manifest::new("cam", &settings, 0, &[]);
    m.outputs = vec!["heatmap.csv".into(), "heatmap.pgm".into(), "overlay.png".into()];
    write_manifest(&m, &a.out_dir.join("manifest.json"))?;
    println!("{summary}");
    Ok(())
}

#[derive(Serialize)]
struct Table1Run<'a> {
    pairs: Vec<String>,
    precision: &'a str,
    settings: &'a PairConfig,
}

fn parse_pairs(raw: &Option<Vec<String>>) -> CliResult<Vec<(ProcessId, ProcessId)>> {
    match raw {
        None => Ok(all_pairs()),
        Some(list) => list
            .iter()
            .map(|p| parse_pair(p).map_err(|e| CliError::config(e.to_string())))
            .collect(),
    }
}

pub fn reproduce_table1(a: Table1Args) -> CliResult {
    let pairs = parse_pairs(&a.pairs)?;
    let mut config: PairConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => PairConfig::default(),
    };
    if let Some(e) = a.epochs {
        config.bcnn.epochs = e;
    }
    if let Some(r) = a.ensemble_size {
        config.bcnn.ensemble_size = r;
    }
    config.bcnn.validate()?;
    let precision = match a.precision {
        PrecisionArg::F64 => "f64",
        PrecisionArg::F32 => "f32",
    };
    let run = Table1Run { pairs: pairs.iter().map(|&p| hosa::eval::pair_name(p)).collect(), precision, settings: &config };
    let hash = config_hash(&run);
    make_dir(&a.out_dir)?;

    let mut outcomes: Vec<PairOutcome> = Vec::with_capacity(pairs.len());
    for &pair in &pairs {
        let seed = pair_seed(a.seed, pair);
        let o = match a.precision {
            PrecisionArg::F64 => run_pair_experiment::<f64>(pair, &config, seed)?,
            PrecisionArg::F32 => run_pair_experiment::<f32>(pair, &config, seed)?,
        };
        log::info!("{} done: bcnn {:.3} ssvs {:.3}", o.name(), o.bcnn.accuracy, o.ssvs.accuracy);
        outcomes.push(o);
        // Rewritten after every pair so a long run leaves partial results.
        write_file(&a.out_dir.join("report.csv"), report_csv(&report_rows(&outcomes, &hash)))?;
    }
    let table = render_table(&outcomes);
    write_file(&a.out_dir.join("table.txt"), &table)?;
    let streams: Vec<String> = run.pairs.iter().map(|p| format!("pair/{p}")).collect();
    let stream_refs: Vec<&str> = streams.iter().map(String::as_str).collect();
    let mut m = Manifest::new("reproduce-table1", &run, a.seed, &stream_refs);
    m.outputs = vec!["report.csv".into(), "table.txt".into()];
    write_manifest(&m, &a.out_dir.join("manifest.json"))?;
    print!("{table}");
    Ok(())
}

fn run_any(config: &ExperimentConfig) -> CliResult<(ExperimentOutcome<f64>, Option<Checkpoint<f32>>)> {
    // f32 runs keep their checkpoint separately; metrics are precision-free.
    match config.precision {
        Precision::F64 => Ok((run_experiment::<f64>(config)?, None)),
        Precision::F32 => {
            let o = run_experiment::<f32>(config)?;
            let ExperimentOutcome { metrics, probabilities, truth, distributions, grid, checkpoint, classes } = o;
            let widened = ExperimentOutcome { metrics, probabilities, truth, distributions, grid, checkpoint: None, classes };
            Ok((widened, checkpoint))
        }
    }
}

/// Writes the outputs of one configured run; returns the report row.
fn write_run(dir: &Path, prefix: &str, label: &str, config: &ExperimentConfig) -> CliResult<(ReportRow, Vec<String>)> {
    let (outcome, ckpt32) = run_any(config)?;
    let hash = config_hash(config);
    let mut outputs = write_predictions(
        dir,
        prefix,
        &outcome.metrics,
        &outcome.probabilities,
        &outcome.truth,
        outcome.distributions.as_deref(),
    )?;
    if let Some((rate, scores)) = &outcome.grid {
        let mut s = String::from("rate,validation_accuracy\n");
        scores.iter().for_each(|(r, v)| s.push_str(&format!("{r},{v}\n")));
        s.push_str(&format!("# chosen,{rate}\n"));
        write_file(&dir.join(format!("{prefix}grid.csv")), s)?;
        outputs.push(format!("{prefix}grid.csv"));
    }
    let ckpt_name = format!("{prefix}model.ckpt");
    if let Some(c) = &outcome.checkpoint {
        c.save(&dir.join(&ckpt_name))?;
        outputs.push(ckpt_name);
    } else if let Some(c) = &ckpt32 {
        c.save(&dir.join(&ckpt_name))?;
        outputs.push(ckpt_name);
    }
    let row = ReportRow {
        experiment: label.to_string(),
        method: config.model.name().to_string(),
        accuracy: outcome.metrics.accuracy,
        auc: outcome.metrics.auc,
        seed: config.seed,
        config_hash: hash,
    };
    Ok((row, outputs))
}

fn experiment_label(config: &ExperimentConfig) -> String {
    match &config.dataset {
        DatasetSource::Simulated { pair, .. } => pair.replace(',', ":"),
        DatasetSource::Csv { train, .. } => train.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned()),
        DatasetSource::Ucr { name, .. } => name.clone(),
    }
}

pub fn run(a: RunArgs) -> CliResult {
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(d) = a.out_dir {
        config.output_dir = d;
    }
    config.validate()?;
    let dir = config.output_dir.clone();
    make_dir(&dir)?;
    write_file(&dir.join("config.json"), config.to_json() + "\n")?;
    let (row, mut outputs) = write_run(&dir, "", &experiment_label(&config), &config)?;
    write_file(&dir.join("report.csv"), report_csv(std::slice::from_ref(&row)))?;
    outputs.extend(["config.json".to_string(), "report.csv".to_string()]);
    let mut m = Manifest::new("run", &config, config.seed, &["simulate", "split", config.model.name(), "predict"]);
    m.outputs = outputs;
    write_manifest(&m, &dir.join("manifest.json"))?;
    print!("{}", report_csv(&[row]));
    Ok(())
}

pub fn reproduce_devices(a: DevicesArgs) -> CliResult {
    let dataset = match (&a.train, &a.test) {
        (Some(train), Some(test)) => {
            DatasetSource::Csv { train: train.clone(), test: Some(test.clone()), subset: a.labels.clone() }
        }
        _ => DatasetSource::Ucr { name: "ElectricDevices".into(), dir: a.dir.clone(), subset: a.labels.clone() },
    };
    let precision = match a.precision {
        PrecisionArg::F64 => Precision::F64,
        PrecisionArg::F32 => Precision::F32,
    };
    let base = ExperimentConfig {
        dataset,
        model: ModelSpec::Ssvs(SsvsConfig::default()),
        protocol: EvalProtocol::Holdout { train_size: None },
        seed: a.seed,
        precision,
        output_dir: a.out_dir.clone(),
    };
    let data = load_data(&base)?;
    let classes = data.classes();
    let truth: Vec<usize> = data.test.iter().map(|s| s.label().unwrap_or(0)).collect();
    let baseline = majority_baseline(&truth)?;
    log::info!("{classes} classes; majority baseline {baseline:.3}");

    let mut bcnn = if classes == 2 {
        BcnnConfig { epochs: 2, batch_size: 128, ..BcnnConfig::default() }
    } else {
        BcnnConfig::multiclass(classes)
    };
    if let Some(r) = a.ensemble_size {
        bcnn.ensemble_size = r;
    }
    let mut configs = vec![ExperimentConfig { model: ModelSpec::Bcnn(bcnn), ..base.clone() }];
    if classes == 2 {
        let all_components = SsvsConfig { components: None, ..SsvsConfig::default() };
        configs.push(ExperimentConfig { model: ModelSpec::Ssvs(all_components), ..base.clone() });
    }

    make_dir(&a.out_dir)?;
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for c in &configs {
        let prefix = format!("{}_", c.model.name());
        let (row, out) = write_run(&a.out_dir, &prefix, "ElectricDevices", c)?;
        rows.push(row);
        outputs.extend(out);
    }
    rows.push(ReportRow {
        experiment: "ElectricDevices".into(),
        method: "majority".into(),
        accuracy: baseline,
        auc: None,
        seed: a.seed,
        config_hash: config_hash(&base),
    });
    let csv = report_csv(&rows);
    write_file(&a.out_dir.join("report.csv"), &csv)?;
    outputs.push("report.csv".into());
    let settings = serde_json::json!({ "classes": classes, "label_map": data.mapping, "runs": configs });
    let mut m = Manifest::new("reproduce-devices", &settings, a.seed, &["bcnn", "ssvs", "predict"]);
    m.outputs = outputs;
    write_manifest(&m, &a.out_dir.join("manifest.json"))?;
    print!("{csv}");
    Ok(())
}

//! End-to-end runs of the binary against the library.

use std::path::Path;
use std::process::{Command, Output};

use hosa::bcnn::BcnnConfig;
use hosa::eval::{pair_seed, run_pair_experiment, Metrics, PairConfig};
use hosa::io::{Checkpoint, FeatureSet};
use hosa::rng::derive_seed;
use hosa::simprocess::ProcessId;
use hosa::spectra::BispectrumImage;
use hosa::ssvs::SsvsConfig;

fn hosa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hosa")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hosa(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn metrics_file(path: &Path) -> Metrics {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let a = ok(&["simulate", "--pair", "I,II", "--seed", "1", "--n-per-class", "5", "--length", "20"]);
    let b = ok(&["simulate", "--pair", "I,II", "--seed", "1", "--n-per-class", "5", "--length", "20"]);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 10);
}

/// simulate -> featurize -> train -> evaluate on disk, then the same
/// prediction done in memory from the saved files.
#[test]
fn evaluate_matches_in_process_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (train_csv, test_csv) = (d.join("train.csv"), d.join("test.csv"));
    ok(&["simulate", "--pair", "I:IV", "--n-per-class", "12", "--length", "24", "--seed", "3", "--out", p(&train_csv)]);
    ok(&["simulate", "--pair", "I:IV", "--n-per-class", "6", "--length", "24", "--seed", "4", "--out", p(&test_csv)]);

    for (kind, model) in [("bispectrum", "bcnn"), ("periodogram", "ssvs")] {
        let (ftr, fte) = (d.join(format!("{kind}.train.feat")), d.join(format!("{kind}.test.feat")));
        ok(&["featurize", "--input", p(&train_csv), "--kind", kind, "--out", p(&ftr)]);
        ok(&["featurize", "--input", p(&test_csv), "--kind", kind, "--out", p(&fte)]);
        let params = d.join(format!("{model}.json"));
        let body = if model == "bcnn" {
            serde_json::to_string(&BcnnConfig { epochs: 3, ensemble_size: 10, ..BcnnConfig::default() }).unwrap()
        } else {
            serde_json::to_string(&SsvsConfig { components: Some(4), iterations: 400, burn_in: 100, ..SsvsConfig::default() })
                .unwrap()
        };
        std::fs::write(&params, body).unwrap();
        let ckpt = d.join(format!("{model}.ckpt"));
        ok(&["train", "--features", p(&ftr), "--model", model, "--params", p(&params), "--seed", "5", "--out", p(&ckpt)]);
        let out = d.join(format!("eval-{model}"));
        let printed = ok(&["evaluate", "--checkpoint", p(&ckpt), "--features", p(&fte), "--seed", "6", "--out-dir", p(&out)]);
        let from_cli = metrics_file(&out.join("metrics.json"));
        assert_eq!(serde_json::from_str::<Metrics>(&printed).unwrap(), from_cli);
        for f in ["predictions.csv", "densities.csv", "manifest.json"] {
            assert!(out.join(f).exists(), "{model}: {f}");
        }

        let set = FeatureSet::load(&fte).unwrap();
        let truth = set.class_labels();
        let probs: Vec<Vec<f64>> = match Checkpoint::<f64>::load(&ckpt).unwrap() {
            Checkpoint::Bcnn(t) => {
                let images: Vec<BispectrumImage<f64>> =
                    set.rows.iter().map(|r| BispectrumImage::from_vec(set.height, r.clone()).unwrap()).collect();
                t.predict(&images, derive_seed(6, "predict")).unwrap().into_iter().map(|d| d.mean).collect()
            }
            Checkpoint::Ssvs(m) => set
                .rows
                .iter()
                .map(|r| {
                    let q = m.predict_proba(r).unwrap();
                    vec![1.0 - q, q]
                })
                .collect(),
        };
        assert_eq!(Metrics::from_probabilities(&probs, &truth).unwrap(), from_cli, "{model}");
    }
}

#[test]
fn table_rows_pass_through_pair_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = PairConfig {
        per_class: 20,
        length: 32,
        train_size: 20,
        bcnn: BcnnConfig { epochs: 2, ensemble_size: 5, ..BcnnConfig::default() },
        ssvs: SsvsConfig { components: Some(4), iterations: 300, burn_in: 100, ..SsvsConfig::default() },
        ..PairConfig::default()
    };
    let path = d.join("pair.json");
    std::fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = d.join("t1");
    let table = ok(&["reproduce-table1", "--pairs", "I:IV", "--seed", "9", "--config", p(&path), "--out-dir", p(&out)]);
    assert_eq!(table.lines().count(), 2);

    let pair = (ProcessId::BilinI, ProcessId::SetarIV);
    let o = run_pair_experiment::<f64>(pair, &config, pair_seed(9, pair)).unwrap();
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for (row, (method, m)) in rows.iter().zip([("bcnn", &o.bcnn), ("ssvs", &o.ssvs)]) {
        assert_eq!(row[0], "I:IV");
        assert_eq!(row[1], method);
        assert_eq!(row[2].parse::<f64>().unwrap(), m.accuracy);
        assert_eq!(row[3].parse::<f64>().ok(), m.auc);
    }
}

fn exit_code(args: &[&str]) -> (i32, serde_json::Value) {
    let out = hosa(args);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap_or(serde_json::Value::Null);
    (out.status.code().unwrap(), err)
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = exit_code(&["simulate", "--pair", "I,IX"]);
    assert_eq!(code, 2);
    assert_eq!(err["error"], "config");

    let (code, _) = exit_code(&["no-such-command"]);
    assert_eq!(code, 2);

    let missing = dir.path().join("missing.csv");
    let (code, _) = exit_code(&["featurize", "--input", p(&missing), "--kind", "bispectrum", "--out", "x.feat"]);
    assert!(code == 2 || code == 3, "{code}");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0,1.0,2.0\n1,abc,3.0\n").unwrap();
    let (code, err) = exit_code(&["featurize", "--input", p(&bad), "--kind", "bispectrum", "--out", p(&dir.path().join("o"))]);
    assert_eq!(code, 3);
    assert!(err["message"].as_str().unwrap().contains('2'), "{err}");

    assert_eq!(hosa(&["--help"]).status.code(), Some(0));
}

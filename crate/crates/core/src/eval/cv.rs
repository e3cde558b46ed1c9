use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::experiment::TrainedBcnn;
use super::metrics::{decide, Metrics};
use crate::bcnn::BcnnConfig;
use crate::error::{EvalError, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::spectra::BispectrumImage;

/// Dropout rates searched by default.
pub const DEFAULT_RATES: [f64; 5] = [0.02, 0.04, 0.06, 0.08, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvPlan {
    pub k: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self { k: 10, iterations: 50, seed: 0 }
    }
}

impl CvPlan {
    pub fn validate(&self, dataset: usize) -> Result<(), EvalError> {
        if self.k == 0 || self.iterations == 0 || 2 * self.k > dataset {
            return Err(EvalError::DatasetTooSmall { size: dataset, k: self.k });
        }
        Ok(())
    }
}

/// Validation and test indices of one iteration plus its training remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct CvDraw {
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub train: Vec<usize>,
}

/// The random index draws of a plan over a dataset of `n` items.
pub fn cv_draws(plan: &CvPlan, n: usize) -> Result<Vec<CvDraw>, EvalError> {
    plan.validate(n)?;
    let mut r = rng::stream(plan.seed, "cv");
    let mut idx: Vec<usize> = (0..n).collect();
    let draws = (0..plan.iterations)
        .map(|_| {
            idx.shuffle(&mut r);
            let mut validation = idx[..plan.k].to_vec();
            let mut test = idx[plan.k..2 * plan.k].to_vec();
            let mut train = idx[2 * plan.k..].to_vec();
            validation.sort_unstable();
            test.sort_unstable();
            train.sort_unstable();
            let held: std::collections::HashSet<usize> = validation.iter().chain(&test).copied().collect();
            assert_eq!(held.len(), 2 * plan.k, "validation and test overlap");
            assert!(train.iter().all(|i| !held.contains(i)), "training set leaks held-out series");
            CvDraw { validation, test, train }
        })
        .collect();
    Ok(draws)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Pooled validation accuracy per candidate rate, in input order.
    pub validation_accuracy: Vec<(f64, f64)>,
    pub chosen_rate: f64,
    /// Pooled test predictions of the chosen rate.
    pub test: Metrics,
    pub test_probabilities: Vec<Vec<f64>>,
    pub test_truth: Vec<usize>,
}

/// Picks the rate with the best score; ties go to the larger rate.
pub fn choose_rate(scores: &[(f64, f64)]) -> Option<f64> {
    scores
        .iter()
        .copied()
        .reduce(|best, cand| {
            if cand.1 > best.1 || (cand.1 == best.1 && cand.0 > best.0) {
                cand
            } else {
                best
            }
        })
        .map(|(rate, _)| rate)
}

/// Repeated leave-k-out cross-validation of the BCNN with a dropout-rate
/// grid search. Every iteration refits one model per rate on the training
/// remainder; the rate with the best pooled validation accuracy is reported
/// on its pooled test predictions.
pub fn leave_k_out<S: Scalar>(
    images: &[BispectrumImage<S>],
    labels: &[usize],
    config: &BcnnConfig,
    plan: &CvPlan,
    rates: &[f64],
) -> Result<CvReport> {
    if images.len() != labels.len() {
        return Err(EvalError::LengthMismatch(images.len(), labels.len()).into());
    }
    if rates.is_empty() {
        return Err(EvalError::Empty.into());
    }
    let draws = cv_draws(plan, images.len())?;
    let mut val_hits = vec![0usize; rates.len()];
    let mut test_probs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); rates.len()];
    let mut test_truth = Vec::new();
    let fit_base = rng::derive_seed(plan.seed, "cv/fit");
    let predict_base = rng::derive_seed(plan.seed, "cv/predict");

    for (it, draw) in draws.iter().enumerate() {
        let pick = |idx: &[usize]| idx.iter().map(|&i| images[i].clone()).collect::<Vec<_>>();
        let labels_of = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
        let (train, val, test) = (pick(&draw.train), pick(&draw.validation), pick(&draw.test));
        let y_train = labels_of(&draw.train);
        let y_val = labels_of(&draw.validation);
        test_truth.extend(labels_of(&draw.test));
        let it_seed = rng::child_seed(fit_base, it as u64);
        for (ri, &rate) in rates.iter().enumerate() {
            let cfg = BcnnConfig { dropout_rate: rate, seed: it_seed, ..config.clone() };
            let trained = TrainedBcnn::fit(&train, &y_train, cfg)?;
            let pseed = rng::child_seed(predict_base, it as u64);
            let val_pred = trained.predict(&val, pseed)?;
            val_hits[ri] += val_pred.iter().zip(&y_val).filter(|(d, &y)| decide(&d.mean) == y).count();
            let test_pred = trained.predict(&test, rng::derive_seed(pseed, "test"))?;
            test_probs[ri].extend(test_pred.into_iter().map(|d| d.mean));
        }
        log::info!("cv iteration {}/{}", it + 1, plan.iterations);
    }

    let pooled = (plan.iterations * plan.k) as f64;
    let validation_accuracy: Vec<(f64, f64)> =
        rates.iter().zip(&val_hits).map(|(&r, &h)| (r, h as f64 / pooled)).collect();
    let chosen_rate = choose_rate(&validation_accuracy).expect("rates nonempty");
    let best = rates.iter().position(|&r| r == chosen_rate).expect("chosen rate is a candidate");
    let test_probabilities = std::mem::take(&mut test_probs[best]);
    let test = Metrics::from_probabilities(&test_probabilities, &test_truth)?;
    Ok(CvReport { validation_accuracy, chosen_rate, test, test_probabilities, test_truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_disjoint_and_sized() {
        let plan = CvPlan { k: 3, iterations: 20, seed: 5 };
        let draws = cv_draws(&plan, 11).unwrap();
        assert_eq!(draws.len(), 20);
        for d in &draws {
            assert_eq!((d.validation.len(), d.test.len(), d.train.len()), (3, 3, 5));
            assert!(d.validation.iter().all(|i| !d.test.contains(i)));
        }
        assert_eq!(cv_draws(&plan, 11).unwrap(), draws);
    }

    #[test]
    fn too_small() {
        let plan = CvPlan { k: 6, iterations: 1, seed: 0 };
        assert_eq!(cv_draws(&plan, 11), Err(EvalError::DatasetTooSmall { size: 11, k: 6 }));
        let half = CvPlan { k: 6, iterations: 1, seed: 0 };
        let d = cv_draws(&half, 12).unwrap();
        assert!(d[0].train.is_empty());
    }

    #[test]
    fn ties_prefer_larger_rate() {
        assert_eq!(choose_rate(&[(0.02, 0.9), (0.1, 0.9), (0.06, 0.9)]), Some(0.1));
        assert_eq!(choose_rate(&[(0.02, 0.95), (0.1, 0.9)]), Some(0.02));
        assert_eq!(choose_rate(&[]), None);
    }
}

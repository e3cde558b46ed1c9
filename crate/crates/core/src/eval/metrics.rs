use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Fraction of matching labels.
pub fn accuracy(preds: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    check_lengths(preds.len(), truth.len())?;
    let hits = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

fn check_lengths(a: usize, b: usize) -> Result<(), EvalError> {
    if a != b {
        return Err(EvalError::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// Mann-Whitney AUC: the probability that a positive outscores a negative,
/// ties counted half. Computed from mid-ranks after one sort.
pub fn auc(scores: &[f64], truth: &[bool]) -> Result<f64, EvalError> {
    check_lengths(scores.len(), truth.len())?;
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::OneClassOnly);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum keeps mid-ranks integral.
    let mut pos_rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid2 = (i + 1 + j + 1) as u64;
        for &idx in &order[i..=j] {
            if truth[idx] {
                pos_rank_sum2 += mid2;
            }
        }
        i = j + 1;
    }
    let (np, nn) = (n_pos as u64, n_neg as u64);
    let u2 = pos_rank_sum2 - np * (np + 1);
    Ok(u2 as f64 / (2 * np * nn) as f64)
}

/// Decision rule shared by every probabilistic classifier here: class 1
/// when its probability reaches 0.5 in the binary case, else the argmax
/// (first index on ties).
pub fn decide(probs: &[f64]) -> usize {
    if probs.len() == 2 {
        return usize::from(probs[1] >= 0.5);
    }
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Binary problems only.
    pub auc: Option<f64>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
}

impl Metrics {
    /// Scores per-sample class-probability vectors against `truth`.
    pub fn from_probabilities(probs: &[Vec<f64>], truth: &[usize]) -> Result<Self, EvalError> {
        check_lengths(probs.len(), truth.len())?;
        let classes = probs
            .iter()
            .map(Vec::len)
            .chain(truth.iter().map(|&t| t + 1))
            .max()
            .unwrap_or(0);
        let preds: Vec<usize> = probs.iter().map(|p| decide(p)).collect();
        let mut m = Self::from_labels(&preds, truth, classes)?;
        if classes == 2 {
            let scores: Vec<f64> = probs.iter().map(|p| p[1]).collect();
            let pos: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
            m.auc = auc(&scores, &pos).ok();
        }
        Ok(m)
    }

    /// Accuracy and confusion matrix of hard predictions; no AUC.
    pub fn from_labels(preds: &[usize], truth: &[usize], classes: usize) -> Result<Self, EvalError> {
        check_lengths(preds.len(), truth.len())?;
        let classes = preds.iter().chain(truth).map(|&c| c + 1).max().unwrap_or(0).max(classes);
        let mut confusion = vec![vec![0; classes]; classes];
        for (&p, &t) in preds.iter().zip(truth) {
            confusion[t][p] += 1;
        }
        Ok(Self { accuracy: accuracy(preds, truth)?, auc: None, confusion, n: truth.len() })
    }
}

/// Share of the most frequent class: the accuracy of always guessing it.
pub fn majority_baseline(truth: &[usize]) -> Result<f64, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let k = truth.iter().max().map_or(0, |&m| m + 1);
    let mut counts = vec![0usize; k];
    for &t in truth {
        counts[t] += 1;
    }
    Ok(*counts.iter().max().unwrap_or(&0) as f64 / truth.len() as f64)
}

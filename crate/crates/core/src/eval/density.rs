use serde::Serialize;

use crate::error::EvalError;

pub const DENSITY_BINS: usize = 50;

/// Histogram on `[0, 1]` of the probability each sample of one true class
/// received for that class, with its mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDensity {
    pub class: usize,
    pub counts: Vec<usize>,
    pub mean: f64,
}

impl ClassDensity {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Counts normalised to integrate to one over `[0, 1]`.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        let width = 1.0 / self.counts.len() as f64;
        self.counts.iter().map(|&c| c as f64 / (total * width)).collect()
    }
}

fn bin_of(p: f64, bins: usize) -> usize {
    ((p * bins as f64).floor() as usize).min(bins - 1)
}

/// One histogram per class present in `truth`, in class order.
pub fn class_probability_densities(probs: &[Vec<f64>], truth: &[usize]) -> Result<Vec<ClassDensity>, EvalError> {
    if probs.len() != truth.len() {
        return Err(EvalError::LengthMismatch(probs.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let classes = truth.iter().max().map_or(0, |&m| m + 1);
    let mut out = Vec::new();
    for class in 0..classes {
        let own: Vec<f64> = probs
            .iter()
            .zip(truth)
            .filter(|(_, &t)| t == class)
            .map(|(p, _)| p.get(class).copied().unwrap_or(0.0).clamp(0.0, 1.0))
            .collect();
        if own.is_empty() {
            continue;
        }
        let mut counts = vec![0; DENSITY_BINS];
        for &p in &own {
            counts[bin_of(p, DENSITY_BINS)] += 1;
        }
        let mean = own.iter().sum::<f64>() / own.len() as f64;
        out.push(ClassDensity { class, counts, mean });
    }
    Ok(out)
}

/// CSV with header `class,lower,upper,count,density,mean`.
pub fn densities_csv(table: &[ClassDensity]) -> String {
    let mut s = String::from("class,lower,upper,count,density,mean\n");
    for d in table {
        let bins = d.counts.len();
        for (b, (&c, dens)) in d.counts.iter().zip(d.density()).enumerate() {
            let lo = b as f64 / bins as f64;
            let hi = (b + 1) as f64 / bins as f64;
            s.push_str(&format!("{},{lo},{hi},{c},{dens},{}\n", d.class, d.mean));
        }
    }
    s
}

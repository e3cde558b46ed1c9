use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::SsvsError;
use crate::rng::{self, Prng};

/// Spike-and-slab prior `beta_j ~ gamma_j N(0, c tau^2) + (1 - gamma_j) N(0, tau^2)`,
/// `gamma_j ~ Bernoulli(pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsvsPrior {
    pub tau: f64,
    pub c: f64,
    pub pi: f64,
}

impl Default for SsvsPrior {
    fn default() -> Self {
        Self { tau: 0.1, c: 10.0, pi: 0.5 }
    }
}

impl SsvsPrior {
    pub fn validate(&self) -> Result<(), SsvsError> {
        if !(self.tau > 0.0 && self.c > 1.0 && self.pi > 0.0 && self.pi < 1.0) {
            return Err(SsvsError::InvalidArgument(format!("invalid prior {self:?}")));
        }
        Ok(())
    }

    pub fn slab_variance(&self) -> f64 {
        self.c * self.tau * self.tau
    }

    pub fn spike_variance(&self) -> f64 {
        self.tau * self.tau
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsOptions {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Starting coefficients (intercept first); zeros when absent.
    pub init_beta: Option<Vec<f64>>,
    /// Holds the inclusion indicators fixed instead of sampling them.
    pub fixed_gamma: Option<Vec<bool>>,
    /// Holds the latent Gaussians fixed instead of sampling them.
    pub fixed_latent: Option<Vec<f64>>,
}

impl GibbsOptions {
    pub fn new(iterations: usize, burn_in: usize, seed: u64) -> Self {
        Self { iterations, burn_in, seed, init_beta: None, fixed_gamma: None, fixed_latent: None }
    }
}

/// Post-burn-in draws. `betas[t]` has the intercept first; `gammas[t]`
/// covers the non-intercept coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsTrace {
    pub betas: Vec<Vec<f64>>,
    pub gammas: Vec<Vec<bool>>,
    pub latents: Vec<Vec<f64>>,
    pub iterations: usize,
    pub burn_in: usize,
}

impl GibbsTrace {
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Fraction of stored draws with `gamma_j = 1`, per covariate.
    pub fn inclusion_frequencies(&self) -> Vec<f64> {
        let p = self.gammas.first().map_or(0, Vec::len);
        let n = self.gammas.len().max(1) as f64;
        (0..p).map(|j| self.gammas.iter().filter(|g| g[j]).count() as f64 / n).collect()
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let k = self.betas.first().map_or(0, Vec::len);
        let n = self.betas.len().max(1) as f64;
        (0..k).map(|j| self.betas.iter().map(|b| b[j]).sum::<f64>() / n).collect()
    }
}

fn standard_normal() -> Normal {
    Normal::standard()
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Draw from `N(mean, 1)` restricted to `(0, inf)` (positive) or
/// `(-inf, 0]`, by inverting the CDF at uniform `u`.
fn truncated_normal(mean: f64, positive: bool, u: f64) -> f64 {
    let n = standard_normal();
    // Reflect so the draw is always "above zero" for mean m.
    let m = if positive { mean } else { -mean };
    let mass = n.cdf(m);
    let z = if mass > 1e-300 {
        m - n.inverse_cdf((u * mass).max(f64::MIN_POSITIVE))
    } else {
        // Far tail: exponential approximation of the truncated normal.
        -(1.0 - u).max(f64::MIN_POSITIVE).ln() / m.abs()
    };
    if positive {
        z.max(f64::MIN_POSITIVE)
    } else {
        (-z).min(0.0)
    }
}

fn log_normal_density(x: f64, var: f64) -> f64 {
    -0.5 * (x * x / var + (2.0 * std::f64::consts::PI * var).ln())
}

/// Albert-Chib data augmentation Gibbs sampler for the probit SSVS model.
///
/// `design` rows start with the intercept column; `labels[i]` is `y_i = 1`.
/// The intercept always gets the slab variance and is never selected.
pub fn gibbs_fit(
    design: &[Vec<f64>],
    labels: &[bool],
    prior: &SsvsPrior,
    options: &GibbsOptions,
) -> Result<GibbsTrace, SsvsError> {
    prior.validate()?;
    if options.iterations <= options.burn_in {
        return Err(SsvsError::InvalidArgument("iterations must exceed burn-in".into()));
    }
    if design.len() != labels.len() {
        return Err(SsvsError::ShapeMismatch(format!("{} rows vs {} labels", design.len(), labels.len())));
    }
    let k = match (design.first(), &options.init_beta) {
        (Some(row), _) => row.len(),
        (None, Some(b)) => b.len(),
        (None, None) => {
            return Err(SsvsError::InvalidArgument("empty design needs init_beta for its width".into()))
        }
    };
    if k == 0 || design.iter().any(|r| r.len() != k) {
        return Err(SsvsError::ShapeMismatch("ragged or empty design rows".into()));
    }
    let n = design.len();
    let p = k - 1;
    let x = DMatrix::from_fn(n, k, |i, j| design[i][j]);
    let xtx = x.transpose() * &x;

    let mut beta = DVector::from_vec(options.init_beta.clone().unwrap_or_else(|| vec![0.0; k]));
    if beta.len() != k {
        return Err(SsvsError::ShapeMismatch("init_beta width".into()));
    }
    let mut gamma = options.fixed_gamma.clone().unwrap_or_else(|| vec![true; p]);
    if gamma.len() != p {
        return Err(SsvsError::ShapeMismatch("fixed_gamma width".into()));
    }
    let mut latent = match &options.fixed_latent {
        Some(z) if z.len() != n => return Err(SsvsError::ShapeMismatch("fixed_latent length".into())),
        Some(z) => DVector::from_vec(z.clone()),
        None => DVector::zeros(n),
    };

    let mut r: Prng = rng::stream(options.seed, "gibbs");
    let kept = options.iterations - options.burn_in;
    let mut trace = GibbsTrace {
        betas: Vec::with_capacity(kept),
        gammas: Vec::with_capacity(kept),
        latents: Vec::with_capacity(kept),
        iterations: options.iterations,
        burn_in: options.burn_in,
    };
    let (slab, spike) = (prior.slab_variance(), prior.spike_variance());

    for it in 0..options.iterations {
        if options.fixed_latent.is_none() {
            let mean = &x * &beta;
            for i in 0..n {
                latent[i] = truncated_normal(mean[i], labels[i], r.random::<f64>());
            }
        }

        let mut precision = xtx.clone();
        precision[(0, 0)] += 1.0 / slab;
        for j in 0..p {
            precision[(j + 1, j + 1)] += 1.0 / if gamma[j] { slab } else { spike };
        }
        let chol = match Cholesky::new(precision.clone()) {
            Some(c) => c,
            None => {
                log::warn!("posterior precision not positive definite; adding 1e-8 jitter");
                for j in 0..k {
                    precision[(j, j)] += 1e-8;
                }
                Cholesky::new(precision).ok_or(SsvsError::SingularPosteriorCovariance)?
            }
        };
        let mean = chol.solve(&(x.transpose() * &latent));
        let eps = DVector::from_fn(k, |_, _| r.sample::<f64, _>(StandardNormal));
        // L^T d = eps gives d ~ N(0, (L L^T)^-1).
        let dev = chol
            .l()
            .transpose()
            .solve_upper_triangular(&eps)
            .ok_or(SsvsError::SingularPosteriorCovariance)?;
        beta = mean + dev;
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(SsvsError::SingularPosteriorCovariance);
        }

        if options.fixed_gamma.is_none() {
            for j in 0..p {
                let b = beta[j + 1];
                let log_odds = prior.pi.ln() + log_normal_density(b, slab)
                    - (1.0 - prior.pi).ln()
                    - log_normal_density(b, spike);
                let prob = 1.0 / (1.0 + (-log_odds).exp());
                gamma[j] = r.random::<f64>() < prob;
            }
        }

        if it >= options.burn_in {
            trace.betas.push(beta.iter().copied().collect());
            trace.gammas.push(gamma.clone());
            trace.latents.push(latent.iter().copied().collect());
        }
    }
    Ok(trace)
}

/// Mean over stored draws of `Phi(x' beta)`.
pub fn predict_bma(trace: &GibbsTrace, x_new: &[f64]) -> f64 {
    let n = standard_normal();
    let total: f64 = trace
        .betas
        .iter()
        .map(|b| n.cdf(b.iter().zip(x_new).map(|(a, c)| a * c).sum()))
        .sum();
    total / trace.betas.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(betas: Vec<Vec<f64>>) -> GibbsTrace {
        let n = betas.len();
        GibbsTrace { gammas: vec![vec![]; n], latents: vec![vec![]; n], betas, iterations: n, burn_in: 0 }
    }

    #[test]
    fn prior_scales() {
        let p = SsvsPrior::default();
        assert!((p.slab_variance().sqrt() - 0.316_227_766_016_837_9).abs() < 1e-12);
        assert!((p.spike_variance().sqrt() - 0.1).abs() < 1e-15);
        assert!(SsvsPrior { c: 1.0, ..p }.validate().is_err());
        assert!(SsvsPrior { pi: 1.0, ..p }.validate().is_err());
    }

    #[test]
    fn truncated_normal_respects_sign() {
        for &m in &[-50.0, -8.0, -1.0, 0.0, 1.0, 8.0, 50.0] {
            for i in 0..50 {
                let u = (i as f64 + 0.5) / 50.0;
                assert!(truncated_normal(m, true, u) > 0.0);
                assert!(truncated_normal(m, false, u) <= 0.0);
            }
        }
    }

    #[test]
    fn bma_examples() {
        assert_eq!(predict_bma(&trace_of(vec![vec![0.0, 0.7]]), &[1.0, 0.0]), 0.5);
        let single = predict_bma(&trace_of(vec![vec![0.3, -0.4]]), &[1.0, 2.0]);
        assert!((single - normal_cdf(-0.5)).abs() < 1e-15);
        let q = standard_normal().inverse_cdf(0.8);
        let two = predict_bma(&trace_of(vec![vec![-q], vec![q]]), &[1.0]);
        assert!((two - 0.5).abs() < 1e-12);
    }

    #[test]
    fn argument_checks() {
        let prior = SsvsPrior::default();
        let d = vec![vec![1.0, 0.5]];
        assert!(gibbs_fit(&d, &[true], &prior, &GibbsOptions::new(10, 10, 0)).is_err());
        assert!(gibbs_fit(&d, &[true, false], &prior, &GibbsOptions::new(10, 2, 0)).is_err());
        assert!(gibbs_fit(&[], &[], &prior, &GibbsOptions::new(10, 2, 0)).is_err());
    }

    #[test]
    fn latents_match_labels_and_trace_length() {
        let design: Vec<Vec<f64>> = (0..40).map(|i| vec![1.0, (i as f64 - 20.0) / 10.0]).collect();
        let labels: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let t = gibbs_fit(&design, &labels, &SsvsPrior::default(), &GibbsOptions::new(200, 50, 3)).unwrap();
        assert_eq!(t.len(), 150);
        for z in &t.latents {
            for (zi, &yi) in z.iter().zip(&labels) {
                assert_eq!(*zi > 0.0, yi);
            }
        }
        let again = gibbs_fit(&design, &labels, &SsvsPrior::default(), &GibbsOptions::new(200, 50, 3)).unwrap();
        assert_eq!(t, again);
    }
}

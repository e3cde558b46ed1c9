//! Spectral SSVS baseline: periodogram features, PCA, and a probit
//! regression with spike-and-slab variable selection fitted by Gibbs
//! sampling, predicting by Bayesian model averaging.

mod gibbs;
mod pca;

use serde::{Deserialize, Serialize};

pub use gibbs::{gibbs_fit, normal_cdf, predict_bma, GibbsOptions, GibbsTrace, SsvsPrior};
pub use pca::{fit_pca, PcaBasis};

use crate::error::SsvsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsvsConfig {
    /// Retained principal components; `None` keeps all up to numerical rank.
    pub components: Option<usize>,
    pub prior: SsvsPrior,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for SsvsConfig {
    fn default() -> Self {
        Self { components: Some(20), prior: SsvsPrior::default(), iterations: 5000, burn_in: 1000, seed: 0 }
    }
}

/// Fitted spectral-SSVS classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSsvs {
    pub config: SsvsConfig,
    pub basis: PcaBasis,
    pub trace: GibbsTrace,
}

impl SpectralSsvs {
    /// Fits on periodogram rows with binary labels (0/1).
    pub fn fit(features: &[Vec<f64>], labels: &[usize], config: SsvsConfig) -> Result<Self, SsvsError> {
        if features.len() != labels.len() {
            return Err(SsvsError::ShapeMismatch(format!("{} rows vs {} labels", features.len(), labels.len())));
        }
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(SsvsError::InvalidArgument(format!("SSVS is binary; got label {l}")));
        }
        let basis = fit_pca(features, config.components)?;
        let design = features
            .iter()
            .map(|f| design_row(&basis, f))
            .collect::<Result<Vec<_>, _>>()?;
        let y: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        let options = GibbsOptions::new(config.iterations, config.burn_in, config.seed);
        let trace = gibbs_fit(&design, &y, &config.prior, &options)?;
        Ok(Self { config, basis, trace })
    }

    pub fn design_row(&self, features: &[f64]) -> Result<Vec<f64>, SsvsError> {
        design_row(&self.basis, features)
    }

    /// Posterior-averaged probability of class 1.
    pub fn predict_proba(&self, features: &[f64]) -> Result<f64, SsvsError> {
        Ok(predict_bma(&self.trace, &self.design_row(features)?))
    }
}

/// `[1, s_1 / sqrt(l_1), ..., s_p / sqrt(l_p)]`: intercept followed by
/// unit-variance component scores.
pub fn design_row(basis: &PcaBasis, features: &[f64]) -> Result<Vec<f64>, SsvsError> {
    let scores = basis.project(features)?;
    let mut row = Vec::with_capacity(scores.len() + 1);
    row.push(1.0);
    row.extend(scores.iter().zip(&basis.eigenvalues).map(|(s, l)| s / l.sqrt()));
    Ok(row)
}

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::SsvsError;

/// Relative eigenvalue cutoff for the numerical rank.
const RANK_TOL: f64 = 1e-10;

/// Relative spread below which a feature is treated as constant.
const CONSTANT_TOL: f64 = 1e-12;

/// Standardization statistics plus the leading eigenvectors of the
/// standardized training covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// Training feature means.
    pub means: Vec<f64>,
    /// Training feature sds (n - 1 convention); 0 marks a constant feature,
    /// which standardizes to 0.
    pub sds: Vec<f64>,
    /// `p x F` loadings, rows orthonormal, ordered by decreasing eigenvalue.
    pub loadings: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl PcaBasis {
    pub fn components(&self) -> usize {
        self.loadings.len()
    }

    pub fn features(&self) -> usize {
        self.means.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>, SsvsError> {
        if x.len() != self.features() {
            return Err(SsvsError::ShapeMismatch(format!(
                "expected {} features, got {}",
                self.features(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect())
    }

    /// Scores of `x` on the retained components.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, SsvsError> {
        let z = self.standardize(x)?;
        Ok(self
            .loadings
            .iter()
            .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Standardized features rebuilt from component scores.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.features()];
        for (row, s) in self.loadings.iter().zip(scores) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += s * a;
            }
        }
        out
    }
}

/// Eigen-decomposition of the standardized training covariance. With
/// `components == None` every component up to the numerical rank is kept.
pub fn fit_pca(train: &[Vec<f64>], components: Option<usize>) -> Result<PcaBasis, SsvsError> {
    let n = train.len();
    if n < 2 {
        return Err(SsvsError::InvalidArgument(format!("PCA needs at least 2 rows, got {n}")));
    }
    let f = train[0].len();
    if let Some(row) = train.iter().find(|r| r.len() != f) {
        return Err(SsvsError::ShapeMismatch(format!("rows of length {f} and {}", row.len())));
    }
    if components == Some(0) {
        return Err(SsvsError::InvalidArgument("need at least one component".into()));
    }
    if train.iter().flatten().any(|v| !v.is_finite()) {
        return Err(SsvsError::InvalidArgument("non-finite feature value".into()));
    }
    let means: Vec<f64> = (0..f).map(|j| train.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let raw_sds: Vec<f64> = (0..f)
        .map(|j| {
            let ss: f64 = train.iter().map(|r| (r[j] - means[j]).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        })
        .collect();
    // A feature whose spread is rounding noise next to a typical feature
    // (the zero-frequency bin of a demeaned series) counts as constant. The
    // median keeps one heavy-tailed feature from silencing the others.
    let mut sizes: Vec<f64> = means.iter().zip(&raw_sds).map(|(m, s)| m.abs().max(*s)).collect();
    sizes.sort_by(f64::total_cmp);
    let scale = sizes[f / 2];
    let sds: Vec<f64> = raw_sds
        .into_iter()
        .zip(&means)
        .map(|(sd, m)| if sd > CONSTANT_TOL * m.abs().max(scale) { sd } else { 0.0 })
        .collect();
    let z = DMatrix::from_fn(n, f, |i, j| if sds[j] > 0.0 { (train[i][j] - means[j]) / sds[j] } else { 0.0 });
    let cov = (z.transpose() * &z) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > RANK_TOL * top.max(f64::MIN_POSITIVE)).count();
    let p = components.unwrap_or(rank);
    if p > rank {
        return Err(SsvsError::RankDeficient { requested: p, rank });
    }
    let mut loadings = Vec::with_capacity(p);
    let mut eigenvalues = Vec::with_capacity(p);
    for &i in &order[..p] {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let pivot = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        loadings.push(v);
        eigenvalues.push(eig.eigenvalues[i]);
    }
    Ok(PcaBasis { means, sds, loadings, eigenvalues })
}

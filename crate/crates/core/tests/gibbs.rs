//! Probit SSVS sampler against known generative models and closed forms.

use hosa::rng;
use hosa::ssvs::{gibbs_fit, predict_bma, GibbsOptions, SsvsPrior};
use rand::Rng;
use rand_distr::StandardNormal;

/// Standard-normal covariates with a leading intercept column.
fn design(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::from_seed(seed);
    (0..n)
        .map(|_| std::iter::once(1.0).chain((0..p).map(|_| r.sample(StandardNormal))).collect())
        .collect()
}

fn probit_labels(x: &[Vec<f64>], beta: &[f64], seed: u64) -> Vec<bool> {
    let mut r = rng::from_seed(seed);
    x.iter()
        .map(|row| {
            let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            eta + r.sample::<f64, _>(StandardNormal) > 0.0
        })
        .collect()
}

fn sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn empty_likelihood_samples_the_prior() {
    let prior = SsvsPrior::default();
    let p = 5;
    let mut options = GibbsOptions::new(10_100, 100, 3);
    options.init_beta = Some(vec![0.0; p + 1]);
    let trace = gibbs_fit(&[], &[], &prior, &options).unwrap();
    assert_eq!(trace.len(), 10_000);
    let mixture_sd = (prior.pi * prior.slab_variance() + (1.0 - prior.pi) * prior.spike_variance()).sqrt();
    let intercept = sd(trace.betas.iter().map(|b| b[0]));
    assert!((intercept / prior.slab_variance().sqrt() - 1.0).abs() < 0.05, "intercept sd {intercept}");
    for j in 1..=p {
        let s = sd(trace.betas.iter().map(|b| b[j]));
        assert!((s / mixture_sd - 1.0).abs() < 0.05, "beta_{j} sd {s} vs {mixture_sd}");
    }
}

#[test]
fn recovers_the_single_strong_covariate() {
    let (n, p) = (400, 10);
    let x = design(n, p, 1);
    let mut beta = vec![0.0; p + 1];
    beta[1] = 2.0;
    let y = probit_labels(&x, &beta, 2);
    let trace = gibbs_fit(&x, &y, &SsvsPrior::default(), &GibbsOptions::new(3000, 500, 4)).unwrap();
    let freq = trace.inclusion_frequencies();
    assert!(freq[0] > 0.9, "true covariate {:.3}", freq[0]);
    for (j, f) in freq.iter().enumerate().skip(1) {
        assert!(*f < 0.5, "null covariate {} included {f:.3}", j + 1);
    }
}

/// Solves `a x = b` and returns `a^-1` too, by Gauss-Jordan elimination
/// with partial pivoting.
fn solve_and_invert(a: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row = a[i].clone();
            row.push(b[i]);
            row.extend((0..k).map(|j| f64::from(u8::from(i == j))));
            row
        })
        .collect();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        m[c].iter_mut().for_each(|v| *v /= d);
        for i in 0..k {
            if i != c {
                let f = m[i][c];
                let pivot_row = m[c].clone();
                m[i].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    let x = m.iter().map(|row| row[k]).collect();
    let inv = m.iter().map(|row| row[k + 1..].to_vec()).collect();
    (x, inv)
}

#[test]
fn conjugate_corner_matches_ridge_posterior() {
    let (n, p) = (60, 3);
    let x = design(n, p, 5);
    let mut r = rng::from_seed(6);
    let z: Vec<f64> = x.iter().map(|row| 0.5 * row[1] - row[2] + r.sample::<f64, _>(StandardNormal)).collect();
    let y: Vec<bool> = z.iter().map(|&v| v > 0.0).collect();
    let prior = SsvsPrior::default();
    let mut options = GibbsOptions::new(20_000, 0, 7);
    options.fixed_gamma = Some(vec![true; p]);
    options.fixed_latent = Some(z.clone());
    let trace = gibbs_fit(&x, &y, &prior, &options).unwrap();

    let k = p + 1;
    let mut precision = vec![vec![0.0; k]; k];
    let mut xtz = vec![0.0; k];
    for (row, zi) in x.iter().zip(&z) {
        for a in 0..k {
            xtz[a] += row[a] * zi;
            for b in 0..k {
                precision[a][b] += row[a] * row[b];
            }
        }
    }
    for (a, row) in precision.iter_mut().enumerate() {
        row[a] += 1.0 / prior.slab_variance();
    }
    let (ridge, cov) = solve_and_invert(&precision, &xtz);
    let mean = trace.posterior_mean();
    for j in 0..k {
        let se = (cov[j][j] / trace.len() as f64).sqrt();
        assert!((mean[j] - ridge[j]).abs() < 3.0 * se, "beta_{j}: {} vs {} (se {se:e})", mean[j], ridge[j]);
        let spread = sd(trace.betas.iter().map(|b| b[j]));
        assert!((spread / cov[j][j].sqrt() - 1.0).abs() < 0.05, "beta_{j} sd {spread}");
    }
}

#[test]
fn label_flip_mirrors_predictions() {
    let (n, p) = (120, 4);
    let x = design(n, p, 8);
    let y = probit_labels(&x, &[0.3, 1.0, -0.5, 0.0, 0.0], 9);
    let flipped: Vec<bool> = y.iter().map(|v| !v).collect();
    let prior = SsvsPrior::default();
    let mut options = GibbsOptions::new(6000, 500, 10);
    options.init_beta = Some(vec![0.2, 0.0, 0.0, 0.0, 0.0]);
    let a = gibbs_fit(&x, &y, &prior, &options).unwrap();
    options.init_beta = Some(vec![-0.2, 0.0, 0.0, 0.0, 0.0]);
    let b = gibbs_fit(&x, &flipped, &prior, &options).unwrap();
    for row in design(20, p, 11) {
        let (pa, pb) = (predict_bma(&a, &row), predict_bma(&b, &row));
        assert!(pa > 0.0 && pa < 1.0 && pb > 0.0 && pb < 1.0);
        assert!((pa - (1.0 - pb)).abs() < 0.03, "{pa} vs 1 - {pb}");
    }
}

#[test]
fn stored_latents_respect_labels() {
    let x = design(50, 2, 12);
    let y = probit_labels(&x, &[0.0, 1.5, 0.0], 13);
    let trace = gibbs_fit(&x, &y, &SsvsPrior::default(), &GibbsOptions::new(300, 50, 14)).unwrap();
    for z in &trace.latents {
        for (zi, yi) in z.iter().zip(&y) {
            assert_eq!(*zi > 0.0, *yi);
        }
    }
}

use std::f64::consts::PI;

use rustfft::num_complex::Complex;

use crate::error::SpectraError;
use crate::scalar::Scalar;

use super::image::BispectrumImage;
use super::moments::{demean, third_moment_demeaned, zero_pad};
use super::periodogram::dft;
use super::window::LagWindow;

/// Complex raw bispectrum `X_j X_k conj(X_{j+k mod T}) / T` of the demeaned
/// series, row-major `T x T`.
pub fn bispectrum_complex<S: Scalar>(x: &[S]) -> Result<Vec<Complex<S>>, SpectraError> {
    let t = x.len();
    if t < 3 {
        return Err(SpectraError::SeriesTooShort { len: t, min: 3 });
    }
    let spectrum = dft(&demean(x));
    let scale = S::of_usize(t);
    let mut out = Vec::with_capacity(t * t);
    for j in 0..t {
        for k in 0..t {
            out.push(spectrum[j] * spectrum[k] * spectrum[(j + k) % t].conj() / scale);
        }
    }
    Ok(out)
}

/// Modulus of the raw (unsmoothed) sample bispectrum over the full grid.
pub fn bispectrum_raw<S: Scalar>(x: &[S]) -> Result<BispectrumImage<S>, SpectraError> {
    let t = x.len();
    let grid = bispectrum_complex(x)?.into_iter().map(|c| c.norm()).collect();
    Ok(BispectrumImage::from_vec(t, grid).expect("square grid"))
}

/// Demeans, zero-pads to `target`, then takes the raw bispectrum.
pub fn bispectrum_padded<S: Scalar>(
    x: &[S],
    target: usize,
) -> Result<BispectrumImage<S>, SpectraError> {
    bispectrum_raw(&zero_pad(x, target)?)
}

/// Lag-window smoothed bispectrum modulus on the `n x n` natural-frequency
/// grid: `|sum_{|u|,|v| <= M} lambda(u/M, v/M) g(u, v) e^{-2 pi i (u w_j + v w_k)}|`.
pub fn bispectrum_smoothed<S: Scalar>(
    x: &[S],
    window: &LagWindow,
) -> Result<BispectrumImage<S>, SpectraError> {
    let n = x.len();
    if n < 3 {
        return Err(SpectraError::SeriesTooShort { len: n, min: 3 });
    }
    let m = window.truncation;
    if m >= n {
        return Err(SpectraError::WindowTooWide { truncation: m, len: n });
    }
    let d: Vec<f64> = demean(x).iter().map(|v| v.as_f64()).collect();
    let lags: Vec<isize> = (-(m as isize)..=m as isize).collect();
    let width = lags.len();
    let mut weighted = vec![0.0f64; width * width];
    for (a, &u) in lags.iter().enumerate() {
        for (b, &v) in lags.iter().enumerate() {
            let w = window.lag_weight(u, v);
            if w != 0.0 {
                weighted[a * width + b] = w * third_moment_demeaned(&d, u, v);
            }
        }
    }
    let twiddle = |lag: isize, j: usize| {
        let phase = -2.0 * PI * ((lag * j as isize).rem_euclid(n as isize)) as f64 / n as f64;
        Complex::new(phase.cos(), phase.sin())
    };
    // Separable transform: first over v for each (u, k), then over u.
    let mut partial = vec![Complex::new(0.0, 0.0); width * n];
    for a in 0..width {
        for k in 0..n {
            let mut acc = Complex::new(0.0, 0.0);
            for (b, &v) in lags.iter().enumerate() {
                let g = weighted[a * width + b];
                if g != 0.0 {
                    acc += twiddle(v, k) * g;
                }
            }
            partial[a * n + k] = acc;
        }
    }
    let mut grid = vec![S::zero(); n * n];
    for j in 0..n {
        for k in 0..n {
            let mut acc = Complex::new(0.0, 0.0);
            for (a, &u) in lags.iter().enumerate() {
                acc += twiddle(u, j) * partial[a * n + k];
            }
            grid[j * n + k] = S::of(acc.norm());
        }
    }
    Ok(BispectrumImage::from_vec(n, grid).expect("square grid"))
}

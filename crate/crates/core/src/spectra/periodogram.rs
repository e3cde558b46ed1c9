use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::SpectraError;
use crate::scalar::Scalar;

use super::moments::demean;

/// Raw periodogram at the natural frequencies `j / n`, `j = 0..=n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram<S = f64> {
    pub values: Vec<S>,
    pub n: usize,
}

impl<S: Scalar> Periodogram<S> {
    pub fn frequency(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }
}

pub(crate) fn dft<S: Scalar>(x: &[S]) -> Vec<Complex<S>> {
    let mut buf: Vec<Complex<S>> = x.iter().map(|&v| Complex::new(v, S::zero())).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// `|DFT(x - mean)_j|^2 / n`.
pub fn periodogram<S: Scalar>(x: &[S]) -> Result<Periodogram<S>, SpectraError> {
    let n = x.len();
    if n < 2 {
        return Err(SpectraError::SeriesTooShort { len: n, min: 2 });
    }
    let spectrum = dft(&demean(x));
    let scale = S::of_usize(n);
    let values = spectrum[..n / 2 + 1].iter().map(|c| c.norm_sqr() / scale).collect();
    Ok(Periodogram { values, n })
}

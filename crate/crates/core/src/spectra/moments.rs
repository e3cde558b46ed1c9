use crate::error::SpectraError;
use crate::scalar::Scalar;
use crate::series::TimeSeries;

pub fn demean<S: Scalar>(x: &[S]) -> Vec<S> {
    if x.is_empty() {
        return Vec::new();
    }
    let mean = x.iter().copied().sum::<S>() / S::of_usize(x.len());
    x.iter().map(|&v| v - mean).collect()
}

/// Sample autocovariance `(1/n) sum_{t} x[t] x[t+v]` of the demeaned series.
pub fn autocov<S: Scalar>(x: &[S], lag: usize) -> Result<S, SpectraError> {
    let n = x.len();
    if lag >= n {
        return Err(SpectraError::LagOutOfRange { lag: lag as isize, len: n });
    }
    let d = demean(x);
    let sum: S = d[..n - lag].iter().zip(&d[lag..]).map(|(&a, &b)| a * b).sum();
    Ok(sum / S::of_usize(n))
}

/// Sample third-moment function `(1/n) sum_t x[t] x[t+u] x[t+v]` of the
/// demeaned series, summed over every `t` that keeps all three indices in
/// range. Negative lags are allowed.
pub fn third_moment<S: Scalar>(x: &[S], u: isize, v: isize) -> Result<S, SpectraError> {
    let n = x.len();
    for lag in [u, v] {
        if lag.unsigned_abs() >= n {
            return Err(SpectraError::LagOutOfRange { lag, len: n });
        }
    }
    let d = demean(x);
    Ok(third_moment_demeaned(&d, u, v))
}

pub(crate) fn third_moment_demeaned<S: Scalar>(d: &[S], u: isize, v: isize) -> S {
    let n = d.len() as isize;
    let lo = 0.max(-u).max(-v);
    let hi = n - 0.max(u).max(v);
    let mut sum = S::zero();
    for t in lo..hi {
        sum += d[t as usize] * (d[(t + u) as usize] * d[(t + v) as usize]);
    }
    sum / S::of_usize(d.len())
}

/// Demeans `x` and appends zeros up to `target` values.
pub fn zero_pad<S: Scalar>(x: &[S], target: usize) -> Result<Vec<S>, SpectraError> {
    if target < x.len() {
        return Err(SpectraError::TargetShorterThanSeries { target, len: x.len() });
    }
    let mut out = demean(x);
    out.resize(target, S::zero());
    Ok(out)
}

/// [`zero_pad`] on a labeled series; label and source are kept.
pub fn pad_series(series: &TimeSeries, target: usize) -> Result<TimeSeries, SpectraError> {
    let values = zero_pad(series.values(), target)?;
    let mut out = TimeSeries::new(values).expect("padding keeps values finite");
    if let Some(l) = series.label() {
        out = out.with_label(l);
    }
    if let Some(s) = series.source() {
        out = out.with_source(s);
    }
    Ok(out)
}

//! Series-to-feature transforms shared by the experiment pipelines.

use crate::error::SpectraError;
use crate::scalar::Scalar;
use crate::series::TimeSeries;
use crate::spectra::{bispectrum_padded, periodogram, zero_pad, BispectrumImage};

/// Longest series length, the common grid size after zero padding.
pub fn common_length(series: &[TimeSeries]) -> usize {
    series.iter().map(TimeSeries::len).max().unwrap_or(0)
}

/// Raw bispectrum image of every series, zero-padded to `size` (default:
/// the longest series).
pub fn bispectrum_images<S: Scalar>(
    series: &[TimeSeries],
    size: Option<usize>,
) -> Result<Vec<BispectrumImage<S>>, SpectraError> {
    let size = size.unwrap_or_else(|| common_length(series));
    series
        .iter()
        .map(|s| {
            let x: Vec<S> = s.values().iter().map(|&v| S::of(v)).collect();
            bispectrum_padded(&x, size)
        })
        .collect()
}

/// Periodogram of every series, zero-padded to `size` (default: the longest
/// series).
pub fn periodogram_features(series: &[TimeSeries], size: Option<usize>) -> Result<Vec<Vec<f64>>, SpectraError> {
    let size = size.unwrap_or_else(|| common_length(series));
    series
        .iter()
        .map(|s| Ok(periodogram(&zero_pad(s.values(), size)?)?.values))
        .collect()
}

pub fn labels(series: &[TimeSeries]) -> Vec<usize> {
    series.iter().map(|s| s.label().unwrap_or(0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pads_to_longest() {
        let s = vec![
            TimeSeries::labeled(vec![1.0, 2.0, 4.0], 0).unwrap(),
            TimeSeries::labeled(vec![1.0, 0.0, 3.0, 2.0, 5.0], 1).unwrap(),
        ];
        let imgs = bispectrum_images::<f64>(&s, None).unwrap();
        assert!(imgs.iter().all(|i| i.size() == 5));
        let p = periodogram_features(&s, None).unwrap();
        assert!(p.iter().all(|v| v.len() == 3));
        assert_eq!(labels(&s), vec![0, 1]);
    }
}

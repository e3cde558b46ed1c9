//! Second- and third-order moment estimators and the bispectral image.
//!
//! All frequency grids are indexed from zero: column/row `j` sits at
//! `omega_j = j / T`.

mod bispectrum;
mod domain;
mod image;
mod moments;
mod periodogram;
mod scaler;
mod window;

pub use bispectrum::{bispectrum_complex, bispectrum_padded, bispectrum_raw, bispectrum_smoothed};
pub use domain::{in_principal_domain, principal_domain_mask};
pub use image::BispectrumImage;
pub use moments::{autocov, demean, pad_series, third_moment, zero_pad};
pub use periodogram::{periodogram, Periodogram};
pub use scaler::PixelScaler;
pub use window::{LagWindow, WindowKind};

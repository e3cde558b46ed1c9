//! Nonlinear time-series classification from bispectral images.
//!
//! Series are turned into raw bispectrum images and classified by a small
//! convolutional network whose dropout stays active at prediction time,
//! giving a Monte-Carlo predictive distribution per series. A periodogram
//! + PCA + spike-and-slab probit model serves as the second-order baseline.
//!
//! The numeric core (`spectra`, `nn`, `bcnn`) is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the common choices.

pub mod bcnn;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod simprocess;
pub mod spectra;
pub mod ssvs;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use series::TimeSeries;

pub type Tensor64 = nn::Tensor<f64>;
pub type Tensor32 = nn::Tensor<f32>;
pub type Network64 = nn::Network<f64>;
pub type Network32 = nn::Network<f32>;
pub type Bcnn64 = bcnn::Bcnn<f64>;
pub type Bcnn32 = bcnn::Bcnn<f32>;
pub type BispectrumImage64 = spectra::BispectrumImage<f64>;
pub type BispectrumImage32 = spectra::BispectrumImage<f32>;
pub type PixelScaler64 = spectra::PixelScaler<f64>;
pub type PixelScaler32 = spectra::PixelScaler<f32>;
pub type TrainedBcnn64 = eval::TrainedBcnn<f64>;
pub type TrainedBcnn32 = eval::TrainedBcnn<f32>;

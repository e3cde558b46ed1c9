use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::scalar::Scalar;

use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropoutMode {
    Train,
    /// Stochastic masks at prediction time; every call draws a fresh mask.
    McInference,
    Off,
}

impl DropoutMode {
    pub fn is_active(self) -> bool {
        !matches!(self, DropoutMode::Off)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub rate: f64,
    pub mode: DropoutMode,
}

impl DropoutSpec {
    pub fn new(rate: f64, mode: DropoutMode) -> Result<Self, NnError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NnError::InvalidConfig(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Self { rate, mode })
    }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// `1 / (1 - rate)`. `None` means identity.
pub(crate) fn dropout_mask<S: Scalar, R: Rng + ?Sized>(len: usize, rate: f64, mode: DropoutMode, rng: &mut R) -> Option<Vec<S>> {
    if !mode.is_active() || rate == 0.0 {
        return None;
    }
    let keep = S::of(1.0 / (1.0 - rate));
    Some((0..len).map(|_| if rng.random::<f64>() < rate { S::zero() } else { keep }).collect())
}

pub fn dropout_apply<S: Scalar, R: Rng + ?Sized>(x: &Tensor<S>, spec: &DropoutSpec, rng: &mut R) -> Tensor<S> {
    match dropout_mask::<S, R>(x.len(), spec.rate, spec.mode, rng) {
        None => x.clone(),
        Some(mask) => {
            let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
            Tensor::new(x.shape().to_vec(), data).expect("same shape")
        }
    }
}

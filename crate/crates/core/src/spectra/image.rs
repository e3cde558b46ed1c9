use crate::error::SpectraError;
use crate::scalar::Scalar;

/// Square real grid, row-major. Row `j` and column `k` sit at frequencies
/// `j / T` and `k / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BispectrumImage<S = f64> {
    size: usize,
    data: Vec<S>,
}

impl<S: Scalar> BispectrumImage<S> {
    pub fn from_vec(size: usize, data: Vec<S>) -> Result<Self, SpectraError> {
        if data.len() != size * size {
            return Err(SpectraError::ShapeMismatch { expected: size * size, got: data.len() });
        }
        Ok(Self { size, data })
    }

    pub fn zeros(size: usize) -> Self {
        Self { size, data: vec![S::zero(); size * size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, j: usize, k: usize) -> S {
        self.data[j * self.size + k]
    }

    pub fn set(&mut self, j: usize, k: usize, v: S) {
        self.data[j * self.size + k] = v;
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    pub fn cast<U: Scalar>(&self) -> BispectrumImage<U> {
        BispectrumImage {
            size: self.size,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

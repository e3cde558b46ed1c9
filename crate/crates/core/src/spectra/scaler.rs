use crate::error::SpectraError;
use crate::scalar::Scalar;

use super::image::BispectrumImage;

/// Per-pixel standardization fitted on training images. Standard deviations
/// use the population (1/n) convention; zero-variance pixels map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelScaler<S = f64> {
    size: usize,
    mean: Vec<S>,
    sd: Vec<S>,
}

impl<S: Scalar> PixelScaler<S> {
    pub fn fit(images: &[BispectrumImage<S>]) -> Result<Self, SpectraError> {
        if images.len() < 2 {
            return Err(SpectraError::TooFewImages(images.len()));
        }
        let size = images[0].size();
        let pixels = size * size;
        let mut mean = vec![0.0f64; pixels];
        for img in images {
            if img.size() != size {
                return Err(SpectraError::ShapeMismatch { expected: size, got: img.size() });
            }
            for (m, v) in mean.iter_mut().zip(img.as_slice()) {
                *m += v.as_f64();
            }
        }
        let count = images.len() as f64;
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0f64; pixels];
        for img in images {
            for ((s, v), m) in var.iter_mut().zip(img.as_slice()).zip(&mean) {
                let d = v.as_f64() - m;
                *s += d * d;
            }
        }
        Ok(Self {
            size,
            mean: mean.into_iter().map(S::of).collect(),
            sd: var.into_iter().map(|s| S::of((s / count).sqrt())).collect(),
        })
    }

    pub fn from_parts(size: usize, mean: Vec<S>, sd: Vec<S>) -> Result<Self, SpectraError> {
        for len in [mean.len(), sd.len()] {
            if len != size * size {
                return Err(SpectraError::ShapeMismatch { expected: size * size, got: len });
            }
        }
        Ok(Self { size, mean, sd })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    pub fn sd(&self) -> &[S] {
        &self.sd
    }

    pub fn apply(&self, image: &BispectrumImage<S>) -> Result<BispectrumImage<S>, SpectraError> {
        if image.size() != self.size {
            return Err(SpectraError::ShapeMismatch { expected: self.size, got: image.size() });
        }
        let data = image
            .as_slice()
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(&v, (&m, &s))| if s > S::zero() { (v - m) / s } else { S::zero() })
            .collect();
        Ok(BispectrumImage::from_vec(self.size, data).expect("same size"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(v: [f64; 4]) -> BispectrumImage {
        BispectrumImage::from_vec(2, v.to_vec()).unwrap()
    }

    #[test]
    fn identical_images_scale_to_zero() {
        let a = img([1.0, 2.0, 3.0, 4.0]);
        let s = PixelScaler::fit(&[a.clone(), a.clone()]).unwrap();
        assert!(s.apply(&a).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn held_out_uses_training_statistics() {
        // pixel means (2, 2, 5, 0), population sds (1, 0, 3, 0)
        let s = PixelScaler::fit(&[img([1.0, 2.0, 2.0, 0.0]), img([3.0, 2.0, 8.0, 0.0])]).unwrap();
        let out = s.apply(&img([4.0, 7.0, 11.0, -3.0])).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn errors() {
        assert_eq!(PixelScaler::<f64>::fit(&[img([0.0; 4])]), Err(SpectraError::TooFewImages(1)));
        let big = BispectrumImage::<f64>::zeros(3);
        assert!(PixelScaler::fit(&[img([0.0; 4]), big.clone()]).is_err());
        let s = PixelScaler::fit(&[img([0.0; 4]), img([1.0; 4])]).unwrap();
        assert!(s.apply(&big).is_err());
    }
}

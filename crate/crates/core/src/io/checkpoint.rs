use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binary::{Reader, Writer};
use crate::bcnn::{Bcnn, BcnnConfig};
use crate::error::{Error, FormatError, Result};
use crate::eval::TrainedBcnn;
use crate::scalar::Scalar;
use crate::spectra::PixelScaler;
use crate::ssvs::{GibbsTrace, PcaBasis, SpectralSsvs, SsvsConfig};

const MAGIC: &[u8; 8] = b"HOSACKPT";
const VERSION: u32 = 1;

/// A trained model of either kind, ready to save or evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint<S = f64> {
    Bcnn(TrainedBcnn<S>),
    Ssvs(SpectralSsvs),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
enum Meta {
    Bcnn { scalar: String, image_size: usize, config: BcnnConfig },
    Ssvs { config: SsvsConfig },
}

fn scalar_name<S: Scalar>() -> &'static str {
    std::any::type_name::<S>()
}

fn put_buffers<S: Scalar>(w: &mut Writer, buffers: &[&[S]]) {
    w.len(buffers.len());
    for b in buffers {
        w.len(b.len());
        w.f64s(b.iter().map(|v| v.as_f64()));
    }
}

fn get_buffers<S: Scalar>(r: &mut Reader) -> Result<Vec<Vec<S>>, FormatError> {
    let n = r.len(8)?;
    (0..n)
        .map(|_| Ok(r.vec()?.into_iter().map(S::of).collect()))
        .collect()
}

fn copy_into<S: Copy>(dst: Vec<&mut [S]>, src: &[Vec<S>], what: &str) -> Result<(), FormatError> {
    if dst.len() != src.len() || dst.iter().zip(src).any(|(d, s)| d.len() != s.len()) {
        return Err(FormatError::Corrupt(format!("{what} do not match the architecture")));
    }
    for (d, s) in dst.into_iter().zip(src) {
        d.copy_from_slice(s);
    }
    Ok(())
}

impl<S: Scalar> Checkpoint<S> {
    /// Serialises to the sectioned binary container. Floating-point data is
    /// stored as little-endian `f64`, exact for both scalar types.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Writer::default();
        out.buf.extend_from_slice(MAGIC);
        out.u32(VERSION);
        match self {
            Checkpoint::Bcnn(t) => {
                let meta = Meta::Bcnn {
                    scalar: scalar_name::<S>().into(),
                    image_size: t.model.image_size(),
                    config: t.model.config.clone(),
                };
                let mut m = Writer::default();
                m.buf = serde_json::to_vec(&meta).map_err(FormatError::from)?;
                out.section(b"META", m);

                let mut s = Writer::default();
                s.len(t.scaler.size());
                put_buffers(&mut s, &[t.scaler.mean(), t.scaler.sd()]);
                out.section(b"SCAL", s);

                let mut n = Writer::default();
                put_buffers(&mut n, &t.model.network.params());
                out.section(b"NETW", n);

                let mut a = Writer::default();
                a.u64(t.model.adam.step);
                let m: Vec<&[S]> = t.model.adam.m.iter().map(Vec::as_slice).collect();
                let v: Vec<&[S]> = t.model.adam.v.iter().map(Vec::as_slice).collect();
                put_buffers(&mut a, &m);
                put_buffers(&mut a, &v);
                out.section(b"ADAM", a);

                let mut l = Writer::default();
                l.vec(&t.model.loss_history);
                out.section(b"LOSS", l);
            }
            Checkpoint::Ssvs(model) => {
                let mut m = Writer::default();
                m.buf = serde_json::to_vec(&Meta::Ssvs { config: model.config.clone() }).map_err(FormatError::from)?;
                out.section(b"META", m);

                let b = &model.basis;
                let mut p = Writer::default();
                p.vec(&b.means);
                p.vec(&b.sds);
                p.vec(&b.eigenvalues);
                p.len(b.loadings.len());
                for row in &b.loadings {
                    p.vec(row);
                }
                out.section(b"PCAB", p);

                let t = &model.trace;
                let mut w = Writer::default();
                w.len(t.iterations);
                w.len(t.burn_in);
                w.len(t.betas.len());
                for ((beta, gamma), z) in t.betas.iter().zip(&t.gammas).zip(&t.latents) {
                    w.vec(beta);
                    w.len(gamma.len());
                    gamma.iter().for_each(|&g| w.u8(u8::from(g)));
                    w.vec(z);
                }
                out.section(b"TRAC", w);
            }
        }
        Ok(out.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8).ok() != Some(MAGIC.as_slice()) || r.u32()? != VERSION {
            return Err(FormatError::BadHeader("checkpoint").into());
        }
        let mut sections = std::collections::BTreeMap::new();
        while !r.is_done() {
            let (tag, body) = r.section()?;
            sections.insert(tag, body);
        }
        let mut take = |tag: &[u8; 4]| {
            sections
                .remove(tag)
                .ok_or_else(|| FormatError::Corrupt(format!("missing {} section", String::from_utf8_lossy(tag))))
        };
        let meta_body = take(b"META")?;
        let meta: Meta = serde_json::from_slice(meta_body.rest()).map_err(FormatError::from)?;
        match meta {
            Meta::Bcnn { scalar, image_size, config } => {
                if scalar != scalar_name::<S>() {
                    return Err(Error::Config(format!(
                        "checkpoint holds {scalar} weights; loading as {}",
                        scalar_name::<S>()
                    )));
                }
                let mut s = take(b"SCAL")?;
                let size = s.u64()? as usize;
                let mut parts = get_buffers::<S>(&mut s)?.into_iter();
                let (mean, sd) = match (parts.next(), parts.next()) {
                    (Some(m), Some(d)) => (m, d),
                    _ => return Err(FormatError::Corrupt("scaler needs mean and sd".into()).into()),
                };
                let scaler = PixelScaler::from_parts(size, mean, sd)?;

                let mut model = Bcnn::<S>::build(config, image_size)?;
                let params = get_buffers::<S>(&mut take(b"NETW")?)?;
                copy_into(model.network.params_mut(), &params, "weights")?;

                let mut a = take(b"ADAM")?;
                model.adam.step = a.u64()?;
                let m = get_buffers::<S>(&mut a)?;
                let v = get_buffers::<S>(&mut a)?;
                copy_into(model.adam.m.iter_mut().map(Vec::as_mut_slice).collect(), &m, "adam moments")?;
                copy_into(model.adam.v.iter_mut().map(Vec::as_mut_slice).collect(), &v, "adam moments")?;

                model.loss_history = take(b"LOSS")?.vec()?;
                Ok(Checkpoint::Bcnn(TrainedBcnn { scaler, model }))
            }
            Meta::Ssvs { config } => {
                let mut p = take(b"PCAB")?;
                let means = p.vec()?;
                let sds = p.vec()?;
                let eigenvalues = p.vec()?;
                let rows = p.len(8)?;
                let loadings = (0..rows).map(|_| p.vec()).collect::<Result<Vec<_>, _>>()?;
                let basis = PcaBasis { means, sds, loadings, eigenvalues };

                let mut t = take(b"TRAC")?;
                let iterations = t.u64()? as usize;
                let burn_in = t.u64()? as usize;
                let draws = t.len(8)?;
                let mut trace = GibbsTrace {
                    betas: Vec::with_capacity(draws),
                    gammas: Vec::with_capacity(draws),
                    latents: Vec::with_capacity(draws),
                    iterations,
                    burn_in,
                };
                for _ in 0..draws {
                    trace.betas.push(t.vec()?);
                    let g = t.len(1)?;
                    trace.gammas.push(t.take(g)?.iter().map(|&b| b != 0).collect());
                    trace.latents.push(t.vec()?);
                }
                Ok(Checkpoint::Ssvs(SpectralSsvs { config, basis, trace }))
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(FormatError::from)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(FormatError::from)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcnn::ConvBlock;
    use crate::spectra::BispectrumImage;

    fn tiny_bcnn<S: Scalar>() -> TrainedBcnn<S> {
        let config = BcnnConfig {
            conv_blocks: vec![ConvBlock { filters: 2, kernel: 3, pool: 2 }],
            dense_units: 3,
            epochs: 2,
            batch_size: 2,
            ensemble_size: 4,
            ..BcnnConfig::default()
        };
        let images: Vec<BispectrumImage<S>> = (0..4)
            .map(|i| BispectrumImage::from_vec(8, (0..64).map(|p| S::of(((p * (i + 1)) % 7) as f64)).collect()).unwrap())
            .collect();
        TrainedBcnn::fit(&images, &[0, 1, 0, 1], config).unwrap()
    }

    #[test]
    fn bcnn_round_trip_is_exact() {
        let c = Checkpoint::Bcnn(tiny_bcnn::<f64>());
        let back = Checkpoint::<f64>::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back, c);
        let c32 = Checkpoint::Bcnn(tiny_bcnn::<f32>());
        assert_eq!(Checkpoint::<f32>::from_bytes(&c32.to_bytes().unwrap()).unwrap(), c32);
        assert!(matches!(Checkpoint::<f64>::from_bytes(&c32.to_bytes().unwrap()), Err(Error::Config(_))));
    }

    #[test]
    fn ssvs_round_trip_is_exact() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 5) as f64, (i as f64).sin(), (i * i % 11) as f64]).collect();
        let y: Vec<usize> = (0..30).map(|i| usize::from(i % 5 > 1)).collect();
        let config = SsvsConfig { components: Some(2), iterations: 50, burn_in: 10, ..SsvsConfig::default() };
        let c = Checkpoint::<f64>::Ssvs(SpectralSsvs::fit(&x, &y, config).unwrap());
        let bytes = c.to_bytes().unwrap();
        assert_eq!(Checkpoint::<f64>::from_bytes(&bytes).unwrap(), c);
        assert!(Checkpoint::<f64>::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(Checkpoint::<f64>::from_bytes(b"HOSACKPT\x02\0\0\0").is_err());
    }
}

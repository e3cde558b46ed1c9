use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binary::{Reader, Writer};
use crate::error::FormatError;

const MAGIC: &[u8; 8] = b"HOSAFEAT";
const VERSION: u32 = 1;
const NO_LABEL: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Square raw-bispectrum images.
    Bispectrum,
    /// Periodogram vectors.
    Periodogram,
}

/// A batch of equally shaped feature arrays with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub kind: FeatureKind,
    pub height: usize,
    pub width: usize,
    pub labels: Vec<Option<usize>>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn new(
        kind: FeatureKind,
        height: usize,
        width: usize,
        labels: Vec<Option<usize>>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, FormatError> {
        if labels.len() != rows.len() {
            return Err(FormatError::Corrupt(format!("{} labels for {} rows", labels.len(), rows.len())));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != height * width) {
            return Err(FormatError::Corrupt(format!("row of {} values, expected {}", r.len(), height * width)));
        }
        Ok(Self { kind, height, width, labels, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Labels with missing ones read as class 0.
    pub fn class_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.unwrap_or(0)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u32(VERSION);
        w.u8(match self.kind {
            FeatureKind::Bispectrum => 0,
            FeatureKind::Periodogram => 1,
        });
        w.len(self.rows.len());
        w.len(self.height);
        w.len(self.width);
        for l in &self.labels {
            w.u64(l.map_or(NO_LABEL, |v| v as u64));
        }
        for r in &self.rows {
            w.f64s(r.iter().copied());
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        if r.take(8).ok() != Some(MAGIC.as_slice()) || r.u32()? != VERSION {
            return Err(FormatError::BadHeader("feature file"));
        }
        let kind = match r.u8()? {
            0 => FeatureKind::Bispectrum,
            1 => FeatureKind::Periodogram,
            k => return Err(FormatError::Corrupt(format!("unknown feature kind {k}"))),
        };
        let count = r.len(8)?;
        let (height, width) = (r.u64()? as usize, r.u64()? as usize);
        let labels = (0..count)
            .map(|_| r.u64().map(|l| (l != NO_LABEL).then_some(l as usize)))
            .collect::<Result<Vec<_>, _>>()?;
        let per = height
            .checked_mul(width)
            .ok_or_else(|| FormatError::Corrupt("feature shape overflows".into()))?;
        let rows = (0..count).map(|_| r.f64s(per)).collect::<Result<Vec<_>, _>>()?;
        if !r.is_done() {
            return Err(FormatError::Corrupt("trailing bytes after feature data".into()));
        }
        Self::new(kind, height, width, labels, rows)
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

//! Little-endian primitives for the binary containers.

use crate::error::FormatError;

#[derive(Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn len(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64s(&mut self, v: impl IntoIterator<Item = f64>) {
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    /// Length-prefixed `f64` run.
    pub fn vec(&mut self, v: &[f64]) {
        self.len(v.len());
        self.f64s(v.iter().copied());
    }

    pub fn section(&mut self, tag: &[u8; 4], body: Writer) {
        self.buf.extend_from_slice(tag);
        self.len(body.buf.len());
        self.buf.extend_from_slice(&body.buf);
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| FormatError::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// A count, checked against the bytes left so corrupt input cannot
    /// trigger huge allocations.
    pub fn len(&mut self, item_bytes: usize) -> Result<usize, FormatError> {
        let n = self.u64()?;
        let left = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(item_bytes.max(1) as u64) > left {
            return Err(FormatError::Corrupt(format!("count {n} exceeds remaining {left} bytes")));
        }
        Ok(n as usize)
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| FormatError::Corrupt("overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    pub fn vec(&mut self) -> Result<Vec<f64>, FormatError> {
        let n = self.len(8)?;
        self.f64s(n)
    }

    /// Next `(tag, body)` section.
    pub fn section(&mut self) -> Result<([u8; 4], Reader<'a>), FormatError> {
        let tag: [u8; 4] = self.take(4)?.try_into().expect("4 bytes");
        let n = self.len(1)?;
        Ok((tag, Reader::new(self.take(n)?)))
    }
}

impl<'a> Reader<'a> {
    /// Everything not yet consumed.
    pub fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

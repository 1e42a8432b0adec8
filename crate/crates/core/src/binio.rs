//! Little-endian primitives shared by the binary file formats.

use std::io::{Read, Write};

use crate::error::FormatError;

pub(crate) struct LeReader<R> {
    inner: R,
}

impl<R: Read> LeReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    fn fill(&mut self, buf: &mut [u8], what: &'static str) -> Result<(), FormatError> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => FormatError::Truncated { what },
            _ => FormatError::Io(e),
        })
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        let mut found = [0u8; 4];
        self.fill(&mut found, "magic")?;
        if found != expected {
            return Err(FormatError::BadMagic { expected, found });
        }
        Ok(())
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        let mut b = [0u8; 4];
        self.fill(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        let mut b = [0u8; 8];
        self.fill(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn bytes(&mut self, len: usize, what: &'static str) -> Result<Vec<u8>, FormatError> {
        // Read through `take` so a lying header cannot force a huge allocation.
        let mut out = Vec::new();
        (&mut self.inner)
            .take(len as u64)
            .read_to_end(&mut out)
            .map_err(FormatError::Io)?;
        if out.len() != len {
            return Err(FormatError::Truncated { what });
        }
        Ok(out)
    }

    pub fn f32s(&mut self, len: usize, what: &'static str) -> Result<Vec<f32>, FormatError> {
        let raw = self.bytes(checked_len(len, 4, what)?, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn f64s(&mut self, len: usize, what: &'static str) -> Result<Vec<f64>, FormatError> {
        let raw = self.bytes(checked_len(len, 8, what)?, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u64s(&mut self, len: usize, what: &'static str) -> Result<Vec<u64>, FormatError> {
        let raw = self.bytes(checked_len(len, 8, what)?, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Succeeds only if the stream is exhausted.
    pub fn finish(mut self, format: &'static str) -> Result<(), FormatError> {
        let mut rest = Vec::new();
        self.inner.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(FormatError::TrailingBytes {
                format,
                count: rest.len(),
            });
        }
        Ok(())
    }
}

fn checked_len(len: usize, width: usize, what: &'static str) -> Result<usize, FormatError> {
    len.checked_mul(width).ok_or(FormatError::Truncated { what })
}

pub(crate) fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_f32s<W: Write>(w: &mut W, vs: &[f32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(vs.len() * 4);
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub(crate) fn put_f64s<W: Write>(w: &mut W, vs: &[f64]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(vs.len() * 8);
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub(crate) fn put_u64s<W: Write>(w: &mut W, vs: &[u64]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(vs.len() * 8);
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub(crate) fn usize_from(v: u64, what: &'static str) -> Result<usize, FormatError> {
    usize::try_from(v).map_err(|_| FormatError::Inconsistent(format!("{what} {v} exceeds address space")))
}

//! On-disk formats: binary feature bundles, CSV label and prediction
//! tracks, ensemble subset assignments, and model checkpoints.
//!
//! Every writer is the exact inverse of its reader: writing what was just
//! read produces a byte-identical file. Text floats are printed with
//! Rust's shortest round-trip formatting to keep that guarantee.

mod assignment;
mod bundle;
mod checkpoint;
mod tracks;

pub use assignment::{read_assignment, write_assignment};
pub use bundle::{read_bundle, write_bundle};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use tracks::{read_labels, read_predictions, write_labels, write_predictions};

use crate::error::{Error, Result};
use std::path::Path;

/// Binary cursor with format-error reporting at the current byte offset.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8], path: &'a Path) -> Self {
        ByteReader { buf, pos: 0, path }
    }

    pub(crate) fn err(&self, message: impl Into<String>) -> Error {
        Error::format(
            self.path.display().to_string(),
            0,
            format!("at byte {}: {}", self.pos, message.into()),
        )
    }

    fn need(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(format!(
                "{what}: need {n} bytes, only {} left",
                self.buf.len() - self.pos
            )));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub(crate) fn tag(&mut self, expected: &[u8; 4], what: &str) -> Result<()> {
        let got = self.need(4, what)?;
        if got != expected {
            return Err(Error::format(
                self.path.display().to_string(),
                0,
                format!(
                    "at byte {}: {what}: expected {:?}, found {:?}",
                    self.pos - 4,
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(got)
                ),
            ));
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.need(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.need(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.need(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    /// A u64 that will be used as an element count; bounded by the bytes
    /// actually remaining so a corrupt length cannot trigger a huge
    /// allocation.
    pub(crate) fn count(&mut self, what: &str, elem_size: usize) -> Result<usize> {
        let raw = self.u64(what)?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if raw.saturating_mul(elem_size as u64) > remaining {
            return Err(self.err(format!(
                "{what}: claims {raw} elements ({} bytes each) but only {remaining} bytes remain",
                elem_size
            )));
        }
        Ok(raw as usize)
    }

    pub(crate) fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.need(count * 8, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        if self.buf.len() - self.pos < len {
            return Err(self.err(format!(
                "{what}: string claims {len} bytes but only {} remain",
                self.buf.len() - self.pos
            )));
        }
        let bytes = self.need(len, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| self.err(format!("{what}: string is not valid UTF-8")))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.err(format!(
                "trailing bytes: {} past the end of the payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn push_string(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Lowercased class name with spaces turned into underscores, used for
/// CSV column headers and other text formats.
pub(crate) fn slug(name: &str) -> String {
    name.to_lowercase().replace(' ', "_")
}

//! Flat little-endian checkpoint container shared by every model.
//!
//! ```text
//! magic      8 bytes   "CLAMCKPT" or "MILCKPT\0"
//! version    u32       1
//! n_classes  u32
//! feature_d  u32
//! repeated until end of file:
//!   rows     u32
//!   cols     u32
//!   values   rows·cols × f64, row-major
//! ```

use crate::error::{ClamError, Result};
use crate::numerics::Matrix;

pub const CLAM_MAGIC: [u8; 8] = *b"CLAMCKPT";
pub const MIL_MAGIC: [u8; 8] = *b"MILCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub magic: [u8; 8],
    pub n_classes: u32,
    pub feature_dim: u32,
    pub matrices: Vec<Matrix>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload: usize = self.matrices.iter().map(|m| 8 + 8 * m.data().len()).sum();
        let mut out = Vec::with_capacity(20 + payload);
        out.extend_from_slice(&self.magic);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.n_classes.to_le_bytes());
        out.extend_from_slice(&self.feature_dim.to_le_bytes());
        for m in &self.matrices {
            out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a checkpoint whose magic must equal `expected_magic`.
    pub fn from_bytes(bytes: &[u8], expected_magic: &[u8; 8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic = r.take(8)?;
        if magic != expected_magic {
            return Err(ClamError::format(
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(magic),
                    String::from_utf8_lossy(expected_magic)
                ),
            ));
        }
        let version_at = r.pos;
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(ClamError::format(
                version_at as u64,
                format!("unsupported checkpoint version {version}"),
            ));
        }
        let n_classes = r.u32()?;
        let feature_dim = r.u32()?;
        let mut matrices = Vec::new();
        while !r.done() {
            let at = r.pos;
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let count = rows
                .checked_mul(cols)
                .filter(|c| c.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| {
                    ClamError::format(
                        at as u64,
                        format!("{rows}x{cols} matrix exceeds the remaining {} bytes", r.remaining()),
                    )
                })?;
            let raw = r.take(count * 8)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            matrices.push(Matrix::from_vec(rows, cols, data)?);
        }
        Ok(Checkpoint {
            magic: *expected_magic,
            n_classes,
            feature_dim,
            matrices,
        })
    }

    /// Checks that the stored matrices have exactly the given shapes.
    pub fn expect_shapes(&self, shapes: &[(usize, usize)]) -> Result<()> {
        if self.matrices.len() != shapes.len() {
            return Err(ClamError::format(
                20,
                format!(
                    "checkpoint holds {} matrices, expected {}",
                    self.matrices.len(),
                    shapes.len()
                ),
            ));
        }
        for (i, (m, &s)) in self.matrices.iter().zip(shapes).enumerate() {
            if m.shape() != s {
                return Err(ClamError::dim(format!(
                    "checkpoint matrix {i} is {:?}, expected {s:?}",
                    m.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Bounds-checked little-endian cursor reporting byte offsets on failure.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(ClamError::format(
                self.pos as u64,
                format!("truncated: need {n} bytes, {} left", self.remaining()),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            magic: CLAM_MAGIC,
            n_classes: 2,
            feature_dim: 3,
            matrices: vec![
                Matrix::from_rows(&[[1.0, -2.5, 3.0], [0.0, f64::MIN_POSITIVE, -0.0]]).unwrap(),
                Matrix::row_vector(&[7.0, 8.0]),
                Matrix::zeros(0, 4),
            ],
        }
    }

    #[test]
    fn round_trip() {
        let ck = sample();
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..8], b"CLAMCKPT");
        assert_eq!(bytes.len(), 20 + (8 + 48) + (8 + 16) + 8);
        let back = Checkpoint::from_bytes(&bytes, &CLAM_MAGIC).unwrap();
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_wrong_magic_and_truncation() {
        let bytes = sample().to_bytes();
        match Checkpoint::from_bytes(&bytes, &MIL_MAGIC) {
            Err(ClamError::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
        for cut in 0..bytes.len() {
            // Cuts on a matrix boundary leave a valid, shorter checkpoint.
            if matches!(cut, 20 | 76 | 100) {
                continue;
            }
            assert!(
                matches!(
                    Checkpoint::from_bytes(&bytes[..cut], &CLAM_MAGIC),
                    Err(ClamError::Format { .. })
                ),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn oversized_matrix_header() {
        let mut bytes = Checkpoint {
            matrices: vec![],
            ..sample()
        }
        .to_bytes();
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        match Checkpoint::from_bytes(&bytes, &CLAM_MAGIC) {
            Err(ClamError::Format { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Flat little-endian bag file.
//!
//! ```text
//! magic       8 bytes  "CLAMBAG1"
//! version     u32      1
//! K           u32      instances
//! D           u32      feature dimension
//! label       i32      negative for unlabeled
//! id_len      u32
//! slide_id    id_len bytes, UTF-8
//! patch_size  u32
//! step        u32
//! features    K·D × f32, row-major
//! coords      K × (x i32, y i32)
//! ```
//!
//! The header fixes the file length exactly; trailing bytes are an error.

use crate::bag::FeatureBag;
use crate::checkpoint::Reader;
use crate::error::{ClamError, Result};
use crate::numerics::Matrix;

pub const BAG_MAGIC: [u8; 8] = *b"CLAMBAG1";
pub const BAG_VERSION: u32 = 1;

/// Length of a bag file with the given sizes, if it fits in `usize`.
pub fn bag_file_len(k: usize, d: usize, id_len: usize) -> Option<usize> {
    let features = k.checked_mul(d)?.checked_mul(4)?;
    let coords = k.checked_mul(8)?;
    36usize.checked_add(id_len)?.checked_add(features)?.checked_add(coords)
}

/// Serializes `bag`; features are narrowed to `f32`.
pub fn write_bag(bag: &FeatureBag) -> Result<Vec<u8>> {
    let (k, d) = bag.features.shape();
    if bag.coords.len() != k {
        return Err(ClamError::dim(format!(
            "{} coordinates for {k} instances",
            bag.coords.len()
        )));
    }
    let as_u32 =
        |v: usize, what: &str| u32::try_from(v).map_err(|_| ClamError::dim(format!("{what} {v} does not fit in u32")));
    let id = bag.slide_id.as_bytes();
    let len = bag_file_len(k, d, id.len()).ok_or_else(|| ClamError::dim("bag too large"))?;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&BAG_MAGIC);
    out.extend_from_slice(&BAG_VERSION.to_le_bytes());
    out.extend_from_slice(&as_u32(k, "instance count")?.to_le_bytes());
    out.extend_from_slice(&as_u32(d, "feature dimension")?.to_le_bytes());
    out.extend_from_slice(&bag.label.to_le_bytes());
    out.extend_from_slice(&as_u32(id.len(), "slide id length")?.to_le_bytes());
    out.extend_from_slice(id);
    out.extend_from_slice(&bag.patch_size.to_le_bytes());
    out.extend_from_slice(&bag.step.to_le_bytes());
    for &v in bag.features.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for c in &bag.coords {
        out.extend_from_slice(&c[0].to_le_bytes());
        out.extend_from_slice(&c[1].to_le_bytes());
    }
    Ok(out)
}

/// Parses a bag file, rejecting bad magic, unknown versions, invalid UTF-8
/// ids, and any length other than the one the header implies. Errors carry
/// the byte offset where parsing failed.
pub fn read_bag(bytes: &[u8]) -> Result<FeatureBag> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != BAG_MAGIC {
        return Err(ClamError::format(0, "bad magic, expected CLAMBAG1"));
    }
    let version = r.u32()?;
    if version != BAG_VERSION {
        return Err(ClamError::format(8, format!("unsupported version {version}")));
    }
    let k = r.u32()? as usize;
    let d = r.u32()? as usize;
    let label = r.i32()?;
    let id_offset = r.pos;
    let id_len = r.u32()? as usize;
    let expected = bag_file_len(k, d, id_len)
        .ok_or_else(|| ClamError::format(12, format!("K={k}, D={d} overflows the file size")))?;
    if bytes.len() > expected {
        return Err(ClamError::format(
            expected as u64,
            format!("{} trailing bytes", bytes.len() - expected),
        ));
    }
    let id = std::str::from_utf8(r.take(id_len)?)
        .map_err(|e| ClamError::format((id_offset + 4 + e.valid_up_to()) as u64, "slide id is not UTF-8"))?
        .to_string();
    let patch_size = r.u32()?;
    let step = r.u32()?;
    let raw = r.take(k * d * 4)?;
    let data = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    let features = Matrix::from_vec(k, d, data)?;
    let mut coords = Vec::with_capacity(k);
    for _ in 0..k {
        coords.push([r.i32()?, r.i32()?]);
    }
    debug_assert!(r.done());
    Ok(FeatureBag {
        slide_id: id,
        label,
        features,
        coords,
        patch_size,
        step,
        evidence: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureBag {
        let features = Matrix::from_rows(&[[1.5, -2.0, 0.25], [0.0, 3.0, -0.5]]).unwrap();
        FeatureBag {
            slide_id: "slide_é1".into(),
            label: 2,
            features,
            coords: vec![[0, 0], [256, -12]],
            patch_size: 256,
            step: 128,
            evidence: None,
        }
    }

    #[test]
    fn round_trip() {
        let bag = sample();
        let bytes = write_bag(&bag).unwrap();
        assert_eq!(bytes.len(), bag_file_len(2, 3, bag.slide_id.len()).unwrap());
        let back = read_bag(&bytes).unwrap();
        assert_eq!(back, bag);
        assert_eq!(write_bag(&back).unwrap(), bytes);
    }

    #[test]
    fn empty_bag_is_header_only() {
        let bag = FeatureBag {
            coords: vec![],
            features: Matrix::zeros(0, 16),
            ..sample()
        };
        let bytes = write_bag(&bag).unwrap();
        assert_eq!(bytes.len(), 36 + bag.slide_id.len());
        assert_eq!(read_bag(&bytes).unwrap(), bag);
    }

    #[test]
    fn corrupt_files() {
        let bytes = write_bag(&sample()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_bag(&bad), Err(ClamError::Format { offset: 0, .. })));

        for cut in 0..bytes.len() {
            assert!(matches!(read_bag(&bytes[..cut]), Err(ClamError::Format { .. })));
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(read_bag(&long), Err(ClamError::Format { .. })));

        let mut huge = bytes.clone();
        huge[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[16..20].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(read_bag(&huge), Err(ClamError::Format { .. })));

        let mut version = bytes;
        version[8] = 9;
        assert!(matches!(read_bag(&version), Err(ClamError::Format { offset: 8, .. })));
    }
}

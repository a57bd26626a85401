use std::fmt::Write as _;

use crate::error::{ClamError, Result};

use super::segment::SegmentationMask;

pub const PATCH_SIZE: usize = 256;

/// Top-left corners of the patches kept for one slide, full resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub step: usize,
    pub coords: Vec<[i32; 2]>,
}

/// Lattice spacing for a given overlap: `max(1, ⌊size·(1 − overlap)⌋)`.
pub fn patch_step(patch_size: usize, overlap_fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(ClamError::config(format!(
            "overlap fraction {overlap_fraction} outside [0, 1)"
        )));
    }
    Ok(((patch_size as f64 * (1.0 - overlap_fraction)).floor() as usize).max(1))
}

/// Every lattice patch that fits in the image and whose center pixel lies
/// in a retained tissue region, in row-major order.
pub fn extract_patch_grid(mask: &SegmentationMask, patch_size: usize, overlap_fraction: f64) -> Result<PatchGrid> {
    if patch_size == 0 {
        return Err(ClamError::config("patch size must be positive"));
    }
    let step = patch_step(patch_size, overlap_fraction)?;
    let mut coords = Vec::new();
    if !mask.is_empty() && mask.full_width >= patch_size && mask.full_height >= patch_size {
        for y in (0..=mask.full_height - patch_size).step_by(step) {
            for x in (0..=mask.full_width - patch_size).step_by(step) {
                if mask.contains_full_res(x + patch_size / 2, y + patch_size / 2) {
                    coords.push([x as i32, y as i32]);
                }
            }
        }
    }
    Ok(PatchGrid {
        patch_size,
        step,
        coords,
    })
}

impl PatchGrid {
    /// `# patch_size=<p> step=<s>` then one `x,y` line per patch.
    pub fn to_text(&self) -> String {
        let mut out = format!("# patch_size={} step={}\n", self.patch_size, self.step);
        for [x, y] in &self.coords {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let field = |key: &str| -> Result<usize> {
            header
                .split_whitespace()
                .find_map(|t| t.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| ClamError::config(format!("patch grid header lacks {key}")))
        };
        let patch_size = field("patch_size")?;
        let step = field("step")?;
        let coords = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let (x, y) = l.trim().split_once(',').unwrap_or((l, ""));
                match (x.parse(), y.parse()) {
                    (Ok(x), Ok(y)) => Ok([x, y]),
                    _ => Err(ClamError::config(format!(
                        "patch grid line {}: bad coordinate {l:?}",
                        i + 2
                    ))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            patch_size,
            step,
            coords,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_mask(w: usize, h: usize) -> SegmentationMask {
        SegmentationMask::from_binary(w, h, &vec![true; w * h], 1, (w, h), 1).unwrap()
    }

    #[test]
    fn full_foreground_tiles() {
        let g = extract_patch_grid(&full_mask(512, 512), 256, 0.0).unwrap();
        assert_eq!(g.coords, vec![[0, 0], [256, 0], [0, 256], [256, 256]]);
        assert_eq!(patch_step(256, 0.95).unwrap(), 12);
        assert_eq!(patch_step(256, 0.5).unwrap(), 128);
        assert!(patch_step(256, 1.0).is_err());
        assert!(patch_step(256, -0.1).is_err());
    }

    #[test]
    fn empty_mask_gives_no_patches() {
        let m = SegmentationMask::from_binary(4, 4, &[false; 16], 128, (512, 512), 1).unwrap();
        assert!(extract_patch_grid(&m, 256, 0.5).unwrap().coords.is_empty());
    }

    #[test]
    fn center_rule_on_downsampled_mask() {
        // 8×8 mask at 32× over a 256×256 image; left half tissue.
        let fg: Vec<bool> = (0..64).map(|i| i % 8 < 4).collect();
        let m = SegmentationMask::from_binary(8, 8, &fg, 32, (256, 256), 1).unwrap();
        let g = extract_patch_grid(&m, 64, 0.0).unwrap();
        // Columns at x = 0, 64 have centers 32, 96 (< 128).
        assert_eq!(g.coords.len(), 8);
        assert!(g.coords.iter().all(|c| c[0] < 128));
    }

    #[test]
    fn overlap_zero_patches_are_disjoint_and_count_grows() {
        let m = full_mask(1000, 700);
        let g = extract_patch_grid(&m, 256, 0.0).unwrap();
        for (i, a) in g.coords.iter().enumerate() {
            for b in &g.coords[i + 1..] {
                assert!((a[0] - b[0]).abs() >= 256 || (a[1] - b[1]).abs() >= 256);
            }
        }
        let mut last = 0;
        for overlap in [0.0, 0.25, 0.5, 0.75, 0.9, 0.95] {
            let n = extract_patch_grid(&m, 256, overlap).unwrap().coords.len();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn text_round_trip() {
        let g = extract_patch_grid(&full_mask(600, 300), 256, 0.5).unwrap();
        assert_eq!(PatchGrid::parse(&g.to_text()).unwrap(), g);
        assert!(PatchGrid::parse("0,0\n").is_err());
    }
}

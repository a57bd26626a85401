//! Whole-slide image front end: tissue segmentation on a downsampled
//! raster, patch lattice extraction, patch featurization, and the bag file.

mod container;
mod features;
mod image;
mod patch;
mod segment;

pub use container::{bag_file_len, read_bag, write_bag, BAG_MAGIC, BAG_VERSION};
pub use features::{patch_statistics, FeatureExtractor, StubExtractor, STATISTICS_LEN};
pub use image::RgbImage;
pub use patch::{extract_patch_grid, patch_step, PatchGrid, PATCH_SIZE};
pub use segment::{
    format_seg_params_file, parse_seg_params_file, saturation, segment_tissue, Region, SegParams, SegmentationMask,
};

use crate::bag::FeatureBag;
use crate::error::Result;
use crate::numerics::Matrix;

/// Featurizes every patch of `grid` from the full-resolution `image`.
pub fn featurize_grid(
    image: &RgbImage,
    grid: &PatchGrid,
    extractor: &dyn FeatureExtractor,
    slide_id: &str,
    label: i32,
) -> Result<FeatureBag> {
    let mut data = Vec::with_capacity(grid.coords.len() * extractor.dim());
    for &[x, y] in &grid.coords {
        let patch = image.crop(x as usize, y as usize, grid.patch_size, grid.patch_size)?;
        data.extend(extractor.extract(&patch)?);
    }
    Ok(FeatureBag {
        slide_id: slide_id.to_string(),
        label,
        features: Matrix::from_vec(grid.coords.len(), extractor.dim(), data)?,
        coords: grid.coords.clone(),
        patch_size: grid.patch_size as u32,
        step: grid.step as u32,
        evidence: None,
    })
}

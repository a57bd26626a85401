use std::path::PathBuf;

use clam::heatmap::{build_heatmap, percentile_normalize, scores_csv, slide_attention};
use clam::model::forward;
use clam::ClamError;

use super::train::{load_model, LoadedModel};
use crate::error::{CliError, Result};
use crate::io::{load_bag, load_image, write_atomic};

pub struct HeatmapArgs {
    pub checkpoint: PathBuf,
    pub bag: PathBuf,
    pub out: PathBuf,
    pub reference_bag: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub downsample: usize,
    pub alpha: f64,
}

/// Slide size implied by the patch footprints.
fn extent(coords: &[[i32; 2]], patch_size: usize) -> (usize, usize) {
    let reach = |axis: usize| {
        coords
            .iter()
            .map(|c| i64::from(c[axis]) + patch_size as i64)
            .max()
            .unwrap_or(1)
            .max(1) as usize
    };
    (reach(0), reach(1))
}

pub fn heatmap(a: &HeatmapArgs) -> Result<()> {
    let LoadedModel::Clam(model) = load_model(&a.checkpoint)? else {
        return Err(CliError::usage(format!(
            "{} is a MIL checkpoint; heatmaps need attention scores",
            a.checkpoint.display()
        )));
    };
    let bag = load_bag(&a.bag)?;
    if bag.is_empty() {
        return Err(CliError::Core(ClamError::DegenerateBag(format!(
            "{} has no patches",
            a.bag.display()
        ))));
    }
    let (class, raw) = slide_attention(&model, &bag.features)?;
    let reference = match &a.reference_bag {
        Some(p) => forward(&load_bag(p)?.features, &model)?
            .raw_attention
            .row(class)
            .to_vec(),
        None => raw.clone(),
    };
    let normalized = percentile_normalize(&raw, &reference)?;

    let patch_size = bag.patch_size as usize;
    let (full_size, base) = match &a.image {
        Some(p) => {
            let img = load_image(p)?;
            ((img.width(), img.height()), Some(img.downsample(a.downsample)?))
        }
        None => (extent(&bag.coords, patch_size), None),
    };
    let grid = build_heatmap(full_size, a.downsample, patch_size, &bag.coords, &normalized)?;
    let rendered = grid.render(base.as_ref(), a.alpha)?;
    let id = &bag.slide_id;
    write_atomic(&a.out.join(format!("{id}.heatmap.ppm")), &rendered.to_ppm())?;
    write_atomic(
        &a.out.join(format!("{id}.scores.csv")),
        scores_csv(&bag.coords, &raw, &normalized)?.as_bytes(),
    )?;
    println!("{}: predicted class {class}, {} patches", bag.slide_id, bag.len());
    Ok(())
}

mod heatmap;
mod train;

pub use heatmap::{heatmap, HeatmapArgs};
pub use train::{eval, train, Subset};

use std::collections::BTreeMap;
use std::path::Path;

use clam::synth::generate_bags;
use clam::wsi::{
    extract_patch_grid, featurize_grid, format_seg_params_file, parse_seg_params_file, segment_tissue, write_bag,
    PatchGrid, SegParams, SegmentationMask, StubExtractor,
};
use clam::{ClamError, FeatureBag, Matrix};

use crate::config::{KeyValues, SYNTH_KEYS};
use crate::error::{CliError, Result};
use crate::io::{list_with_suffix, load_image, parse_pairs, read_text, write_atomic};

/// Parameter file written next to the masks, ready to edit and pass back.
pub const SEG_PARAMS_FILE: &str = "seg_params.txt";

const MASK_SUFFIX: &str = ".mask.ppm";
const GRID_SUFFIX: &str = ".grid.txt";
const TISSUE: [u8; 3] = [255, 0, 0];

pub fn segment(images: &Path, out: &Path, params: Option<&Path>) -> Result<()> {
    let overrides = match params {
        Some(p) => parse_seg_params_file(&read_text(p)?)?,
        None => BTreeMap::new(),
    };
    let slides = list_with_suffix(images, ".ppm")?;
    if let Some(unknown) = overrides.keys().find(|id| !slides.iter().any(|(s, _)| s == *id)) {
        return Err(CliError::usage(format!(
            "parameter file names unknown slide {unknown:?}"
        )));
    }
    let mut used = BTreeMap::new();
    for (id, path) in &slides {
        let p = overrides.get(id).copied().unwrap_or_default();
        let mask = segment_tissue(&load_image(path)?, &p)?;
        write_atomic(&out.join(format!("{id}{MASK_SUFFIX}")), &mask.to_image().to_ppm())?;
        println!(
            "{id}: {} regions, {} tissue pixels",
            mask.regions.len(),
            mask.foreground_count()
        );
        used.insert(id.clone(), p);
    }
    write_atomic(&out.join(SEG_PARAMS_FILE), format_seg_params_file(&used).as_bytes())
}

/// Rebuilds a mask from its rendered image: tissue pixels are pure red.
fn load_mask(path: &Path, params: &SegParams, full_size: (usize, usize)) -> Result<SegmentationMask> {
    let img = load_image(path)?;
    let expected = (
        full_size.0.div_ceil(params.downsample),
        full_size.1.div_ceil(params.downsample),
    );
    if (img.width(), img.height()) != expected {
        return Err(CliError::Core(ClamError::Dimension(format!(
            "{}: mask is {}×{}, slide at downsample {} needs {}×{}",
            path.display(),
            img.width(),
            img.height(),
            params.downsample,
            expected.0,
            expected.1
        ))));
    }
    let fg: Vec<bool> = img.data().chunks_exact(3).map(|p| p == TISSUE).collect();
    Ok(SegmentationMask::from_binary(
        img.width(),
        img.height(),
        &fg,
        params.downsample,
        full_size,
        0,
    )?)
}

pub fn patch(
    images: &Path,
    masks: &Path,
    out: &Path,
    overlap: f64,
    patch_size: usize,
    save_patches: bool,
) -> Result<()> {
    let params = parse_seg_params_file(&read_text(&masks.join(SEG_PARAMS_FILE))?)?;
    for (id, path) in list_with_suffix(images, ".ppm")? {
        let p = params
            .get(&id)
            .ok_or_else(|| CliError::usage(format!("slide {id} was not segmented")))?;
        let image = load_image(&path)?;
        let mask = load_mask(
            &masks.join(format!("{id}{MASK_SUFFIX}")),
            p,
            (image.width(), image.height()),
        )?;
        let grid = extract_patch_grid(&mask, patch_size, overlap)?;
        write_atomic(&out.join(format!("{id}{GRID_SUFFIX}")), grid.to_text().as_bytes())?;
        if save_patches {
            for &[x, y] in &grid.coords {
                let tile = image.crop(x as usize, y as usize, patch_size, patch_size)?;
                write_atomic(&out.join(&id).join(format!("{x}_{y}.ppm")), &tile.to_ppm())?;
            }
        }
        println!("{id}: {} patches", grid.coords.len());
    }
    Ok(())
}

fn load_labels(path: &Path) -> Result<BTreeMap<String, i32>> {
    let mut labels = BTreeMap::new();
    for (id, label) in parse_pairs(&read_text(path)?, "labels")? {
        let value = label
            .parse()
            .map_err(|_| CliError::usage(format!("label {label:?} of slide {id} is not an integer")))?;
        if labels.insert(id.clone(), value).is_some() {
            return Err(CliError::usage(format!("slide {id} labelled twice")));
        }
    }
    Ok(labels)
}

fn label_of(labels: &BTreeMap<String, i32>, id: &str) -> Result<i32> {
    labels
        .get(id)
        .copied()
        .ok_or_else(|| CliError::usage(format!("no label for slide {id}")))
}

fn save_bag(out: &Path, bag: &FeatureBag) -> Result<()> {
    write_atomic(&out.join(format!("{}.bag", bag.slide_id)), &write_bag(bag)?)
}

pub fn featurize(images: &Path, grids: &Path, labels: &Path, out: &Path, dim: usize, seed: u64) -> Result<()> {
    let labels = load_labels(labels)?;
    let extractor = StubExtractor::new(dim, seed)?;
    for (id, path) in list_with_suffix(grids, GRID_SUFFIX)? {
        let grid = PatchGrid::parse(&read_text(&path)?)?;
        let image = load_image(&images.join(format!("{id}.ppm")))?;
        let bag = featurize_grid(&image, &grid, &extractor, &id, label_of(&labels, &id)?)?;
        save_bag(out, &bag)?;
        println!("{id}: {} × {}", bag.len(), dim);
    }
    Ok(())
}

/// Parses `x,y,f_1,…,f_D` rows; a first line starting with `coord_x` is a header.
fn parse_feature_table(text: &str, source: &Path) -> Result<(Vec<[i32; 2]>, Matrix)> {
    let bad = |line: usize, msg: String| CliError::usage(format!("{}:{line}: {msg}", source.display()));
    let mut coords = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("coord_x")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(bad(i + 1, "need x, y and at least one feature".into()));
        }
        let d = fields.len() - 2;
        if *dim.get_or_insert(d) != d {
            return Err(bad(
                i + 1,
                format!("{d} features, earlier rows have {}", dim.unwrap_or(0)),
            ));
        }
        let int = |s: &str| {
            s.parse::<i32>()
                .map_err(|_| bad(i + 1, format!("bad coordinate {s:?}")))
        };
        coords.push([int(fields[0])?, int(fields[1])?]);
        for f in &fields[2..] {
            data.push(f.parse::<f64>().map_err(|_| bad(i + 1, format!("bad feature {f:?}")))?);
        }
    }
    let dim = dim.ok_or_else(|| bad(1, "no feature rows".into()))?;
    let features = Matrix::from_vec(coords.len(), dim, data)?;
    Ok((coords, features))
}

pub fn import_features(dir: &Path, labels: &Path, out: &Path, patch_size: usize, step: usize) -> Result<()> {
    let labels = load_labels(labels)?;
    for (id, path) in list_with_suffix(dir, ".csv")? {
        let (coords, features) = parse_feature_table(&read_text(&path)?, &path)?;
        let mut bag = FeatureBag::from_features(id.clone(), label_of(&labels, &id)?, features);
        bag.coords = coords;
        bag.patch_size = patch_size as u32;
        bag.step = step as u32;
        save_bag(out, &bag)?;
        println!("{id}: {} × {}", bag.len(), bag.feature_dim());
    }
    Ok(())
}

pub fn synth(out: &Path, config: Option<&Path>, count: Option<usize>, seed: Option<u64>) -> Result<()> {
    let kv = KeyValues::load(config, SYNTH_KEYS)?;
    let mut spec = kv.synth_spec()?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let count = match count {
        Some(c) => c,
        None => kv.get("count")?.unwrap_or(100),
    };
    let bags = generate_bags(&spec, count)?;
    let mut labels = String::from("# slide_id,label\n");
    for bag in &bags {
        save_bag(out, bag)?;
        labels.push_str(&format!("{},{}\n", bag.slide_id, bag.label));
    }
    write_atomic(&out.join("labels.csv"), labels.as_bytes())?;
    println!("{count} bags, {} classes, D = {}", spec.n_classes, spec.feature_dim);
    Ok(())
}

//! Attention heatmaps: percentile normalization, overlap averaging on a
//! downsampled grid, a three-stop diverging colormap and alpha overlay.

use std::fmt::Write as _;

use crate::error::{ClamError, Result};
use crate::model::{forward, ClamParams};
use crate::numerics::Matrix;
use crate::wsi::RgbImage;

/// Colormap stops at 0, 0.5 and 1.
pub const COLD: [u8; 3] = [59, 76, 192];
pub const NEUTRAL: [u8; 3] = [221, 221, 221];
pub const HOT: [u8; 3] = [180, 4, 38];

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Maps each raw score to its percentile rank within `reference`.
///
/// A score equal to reference values takes the mean 0-based rank of the tied
/// block divided by `|reference| − 1`. Scores absent from the reference sit
/// half a rank below the first larger value, clamped to `[0, 1]`. A
/// single-element reference maps everything to 0.5.
pub fn percentile_normalize(raw: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if reference.is_empty() {
        return Err(ClamError::Dimension("percentile reference is empty".into()));
    }
    if raw.iter().chain(reference).any(|x| x.is_nan()) {
        return Err(ClamError::Numeric("attention scores contain NaN".into()));
    }
    if reference.len() == 1 {
        return Ok(vec![0.5; raw.len()]);
    }
    let mut sorted = reference.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = (sorted.len() - 1) as f64;
    Ok(raw
        .iter()
        .map(|&x| {
            let less = sorted.partition_point(|&r| r < x);
            let not_greater = sorted.partition_point(|&r| r <= x);
            let rank = if not_greater > less {
                (less + not_greater - 1) as f64 / 2.0
            } else {
                less as f64 - 0.5
            };
            (rank / top).clamp(0.0, 1.0)
        })
        .collect())
}

/// Predicted class and the pre-softmax attention scores of its branch, one per patch.
pub fn slide_attention(params: &ClamParams, features: &Matrix) -> Result<(usize, Vec<f64>)> {
    let out = forward(features, params)?;
    let class = out.predicted_class();
    Ok((class, out.raw_attention.row(class).to_vec()))
}

/// Per-pixel score sums and hit counts in render space.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapGrid {
    width: usize,
    height: usize,
    downsample: usize,
    score_sum: Vec<f64>,
    hit_count: Vec<u32>,
}

impl HeatmapGrid {
    /// `width × height` render pixels, each covering `downsample²` slide pixels.
    pub fn new(width: usize, height: usize, downsample: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ClamError::Dimension(format!("heatmap grid {width}×{height}")));
        }
        if downsample == 0 {
            return Err(ClamError::Config("heatmap downsample must be positive".into()));
        }
        Ok(HeatmapGrid {
            width,
            height,
            downsample,
            score_sum: vec![0.0; width * height],
            hit_count: vec![0; width * height],
        })
    }

    /// Grid covering a full-resolution slide of the given size.
    pub fn for_slide(full_width: usize, full_height: usize, downsample: usize) -> Result<Self> {
        if downsample == 0 {
            return Err(ClamError::Config("heatmap downsample must be positive".into()));
        }
        Self::new(
            full_width.div_ceil(downsample),
            full_height.div_ceil(downsample),
            downsample,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn downsample(&self) -> usize {
        self.downsample
    }

    /// Render-space pixel range `[lo, hi)` covered by `[start, start + len)`
    /// in slide pixels, clipped to `limit`.
    fn span(&self, start: i64, len: i64, limit: usize) -> (usize, usize) {
        let ds = self.downsample as i64;
        let lo = start.div_euclid(ds).clamp(0, limit as i64);
        let hi = (start + len + ds - 1).div_euclid(ds).clamp(0, limit as i64);
        (lo as usize, hi as usize)
    }

    /// Adds `score` over the footprint of the patch at full-resolution
    /// `coord`. Parts outside the grid are dropped.
    pub fn accumulate(&mut self, coord: [i32; 2], patch_size: usize, score: f64) {
        let len = patch_size as i64;
        let (x0, x1) = self.span(i64::from(coord[0]), len, self.width);
        let (y0, y1) = self.span(i64::from(coord[1]), len, self.height);
        for y in y0..y1 {
            let row = y * self.width;
            for x in x0..x1 {
                self.score_sum[row + x] += score;
                self.hit_count[row + x] += 1;
            }
        }
    }

    pub fn hits(&self, x: usize, y: usize) -> u32 {
        self.hit_count[y * self.width + x]
    }

    /// Mean score at a render pixel, `None` where no patch landed.
    pub fn value(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        match self.hit_count[i] {
            0 => None,
            n => Some(self.score_sum[i] / f64::from(n)),
        }
    }

    /// Colors every covered pixel and blends it over `base` with weight
    /// `alpha`. Uncovered pixels keep the base color, or white without one.
    pub fn render(&self, base: Option<&RgbImage>, alpha: f64) -> Result<RgbImage> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ClamError::Config(format!("alpha {alpha} outside [0, 1]")));
        }
        let mut out = match base {
            Some(img) => {
                if (img.width(), img.height()) != (self.width, self.height) {
                    return Err(ClamError::Dimension(format!(
                        "base image {}×{} does not match heatmap {}×{}",
                        img.width(),
                        img.height(),
                        self.width,
                        self.height
                    )));
                }
                img.clone()
            }
            None => RgbImage::filled(self.width, self.height, [255; 3])?,
        };
        for y in 0..self.height {
            for x in 0..self.width {
                let Some(v) = self.value(x, y) else { continue };
                let heat = colormap(v);
                let color = match base {
                    Some(_) => {
                        let under = out.get(x, y);
                        let mut c = [0u8; 3];
                        for ch in 0..3 {
                            c[ch] = round_half_up(alpha * heat[ch] + (1.0 - alpha) * f64::from(under[ch]));
                        }
                        c
                    }
                    None => heat.map(round_half_up),
                };
                out.set(x, y, color);
            }
        }
        Ok(out)
    }
}

/// Piecewise-linear diverging colormap, unrounded. Values are clamped to `[0, 1]`.
pub fn colormap(value: f64) -> [f64; 3] {
    let v = value.clamp(0.0, 1.0);
    let (from, to, t) = if v <= 0.5 {
        (COLD, NEUTRAL, v / 0.5)
    } else {
        (NEUTRAL, HOT, (v - 0.5) / 0.5)
    };
    let mut c = [0.0; 3];
    for ch in 0..3 {
        c[ch] = f64::from(from[ch]) + t * (f64::from(to[ch]) - f64::from(from[ch]));
    }
    c
}

fn round_half_up(x: f64) -> u8 {
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Accumulates per-patch scores onto a fresh grid for a slide.
pub fn build_heatmap(
    full_size: (usize, usize),
    downsample: usize,
    patch_size: usize,
    coords: &[[i32; 2]],
    scores: &[f64],
) -> Result<HeatmapGrid> {
    if coords.len() != scores.len() {
        return Err(ClamError::Dimension(format!(
            "{} coordinates for {} scores",
            coords.len(),
            scores.len()
        )));
    }
    let mut grid = HeatmapGrid::for_slide(full_size.0, full_size.1, downsample)?;
    for (&c, &s) in coords.iter().zip(scores) {
        grid.accumulate(c, patch_size, s);
    }
    Ok(grid)
}

/// Per-patch score table with header `coord_x,coord_y,raw,normalized`.
pub fn scores_csv(coords: &[[i32; 2]], raw: &[f64], normalized: &[f64]) -> Result<String> {
    if coords.len() != raw.len() || raw.len() != normalized.len() {
        return Err(ClamError::Dimension(format!(
            "{} coordinates, {} raw and {} normalized scores",
            coords.len(),
            raw.len(),
            normalized.len()
        )));
    }
    let mut out = String::from("coord_x,coord_y,raw,normalized\n");
    for ((c, r), n) in coords.iter().zip(raw).zip(normalized) {
        let _ = writeln!(out, "{},{},{r},{n}", c[0], c[1]);
    }
    Ok(out)
}

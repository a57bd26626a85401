use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{ClamError, Result};

use super::image::RgbImage;

/// Tissue segmentation settings, editable per slide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegParams {
    /// Full-resolution pixels per mask pixel along each axis.
    pub downsample: usize,
    /// Mask pixels with saturation above this (0–255 scale) are tissue.
    pub saturation_threshold: u8,
    /// Odd side length of the median filter on the saturation channel.
    pub median_kernel: usize,
    /// Side length of the square closing element.
    pub closing_kernel: usize,
    /// Smallest retained region, in mask pixels.
    pub min_area: usize,
}

impl Default for SegParams {
    fn default() -> Self {
        Self {
            downsample: 32,
            saturation_threshold: 8,
            median_kernel: 7,
            closing_kernel: 4,
            min_area: 512,
        }
    }
}

impl SegParams {
    pub fn validate(&self) -> Result<()> {
        if self.downsample == 0 {
            return Err(ClamError::config("downsample must be at least 1"));
        }
        if self.median_kernel.is_multiple_of(2) {
            return Err(ClamError::config(format!(
                "median_kernel must be odd, got {}",
                self.median_kernel
            )));
        }
        if self.closing_kernel == 0 {
            return Err(ClamError::config("closing_kernel must be at least 1"));
        }
        Ok(())
    }

    /// `key=value` pairs separated by spaces, in a fixed key order.
    pub fn to_fields(&self) -> String {
        format!(
            "downsample={} saturation_threshold={} median_kernel={} closing_kernel={} min_area={}",
            self.downsample, self.saturation_threshold, self.median_kernel, self.closing_kernel, self.min_area
        )
    }

    /// Applies `key=value` overrides on top of `self`.
    pub fn with_fields<'a>(mut self, fields: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        for (key, value) in fields {
            let bad = || ClamError::config(format!("bad value {value:?} for {key}"));
            match key {
                "downsample" => self.downsample = value.parse().map_err(|_| bad())?,
                "saturation_threshold" => self.saturation_threshold = value.parse().map_err(|_| bad())?,
                "median_kernel" => self.median_kernel = value.parse().map_err(|_| bad())?,
                "closing_kernel" => self.closing_kernel = value.parse().map_err(|_| bad())?,
                "min_area" => self.min_area = value.parse().map_err(|_| bad())?,
                other => return Err(ClamError::config(format!("unknown segmentation key {other:?}"))),
            }
        }
        self.validate()?;
        Ok(self)
    }
}

/// Per-slide parameter file: one line per slide,
/// `slide=<id> downsample=32 saturation_threshold=8 …`. Keys left out take
/// their defaults; `#` starts a comment line.
pub fn parse_seg_params_file(text: &str) -> Result<BTreeMap<String, SegParams>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut slide = None;
        let mut fields = Vec::new();
        for token in line.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| ClamError::config(format!("line {}: expected key=value, got {token:?}", lineno + 1)))?;
            if k == "slide" {
                slide = Some(v.to_string());
            } else {
                fields.push((k, v));
            }
        }
        let slide = slide.ok_or_else(|| ClamError::config(format!("line {}: missing slide=", lineno + 1)))?;
        let params = SegParams::default()
            .with_fields(fields)
            .map_err(|e| ClamError::config(format!("line {}: {e}", lineno + 1)))?;
        if out.insert(slide.clone(), params).is_some() {
            return Err(ClamError::config(format!("slide {slide} listed twice")));
        }
    }
    Ok(out)
}

pub fn format_seg_params_file(entries: &BTreeMap<String, SegParams>) -> String {
    let mut out = String::from("# one slide per line; edit values and rerun segment\n");
    for (slide, p) in entries {
        let _ = writeln!(out, "slide={slide} {}", p.to_fields());
    }
    out
}

/// One retained 8-connected tissue region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    /// Pixel count in mask pixels.
    pub area: usize,
    /// `[x0, y0, x1, y1)` in mask pixels.
    pub bbox: [usize; 4],
}

/// Binary tissue mask on the downsampled grid, with its retained regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationMask {
    pub width: usize,
    pub height: usize,
    pub downsample: usize,
    /// Size of the full-resolution image the mask describes.
    pub full_width: usize,
    pub full_height: usize,
    /// 0 for background, `r + 1` for pixels of `regions[r]`.
    labels: Vec<u32>,
    pub regions: Vec<Region>,
}

impl SegmentationMask {
    /// Labels the 8-connected components of `foreground` and keeps those of
    /// at least `min_area` pixels.
    pub fn from_binary(
        width: usize,
        height: usize,
        foreground: &[bool],
        downsample: usize,
        full_size: (usize, usize),
        min_area: usize,
    ) -> Result<Self> {
        if foreground.len() != width * height {
            return Err(ClamError::dim(format!(
                "{} mask values for a {width}×{height} grid",
                foreground.len()
            )));
        }
        let mut labels = vec![0u32; width * height];
        let mut visited = vec![false; width * height];
        let mut regions = Vec::new();
        let mut stack = Vec::new();
        let mut members = Vec::new();
        for start in 0..width * height {
            if !foreground[start] || visited[start] {
                continue;
            }
            visited[start] = true;
            stack.push(start);
            members.clear();
            let mut bbox = [usize::MAX, usize::MAX, 0, 0];
            while let Some(p) = stack.pop() {
                members.push(p);
                let (x, y) = (p % width, p / width);
                bbox = [bbox[0].min(x), bbox[1].min(y), bbox[2].max(x + 1), bbox[3].max(y + 1)];
                for ny in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                        let q = ny * width + nx;
                        if foreground[q] && !visited[q] {
                            visited[q] = true;
                            stack.push(q);
                        }
                    }
                }
            }
            if members.len() >= min_area {
                regions.push(Region {
                    area: members.len(),
                    bbox,
                });
                let id = regions.len() as u32;
                for &p in &members {
                    labels[p] = id;
                }
            }
        }
        Ok(Self {
            width,
            height,
            downsample,
            full_width: full_size.0,
            full_height: full_size.1,
            labels,
            regions,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.labels[y * self.width + x] != 0
    }

    /// Whether full-resolution pixel `(x, y)` falls in a retained region.
    pub fn contains_full_res(&self, x: usize, y: usize) -> bool {
        self.is_foreground(x / self.downsample, y / self.downsample)
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// Tissue as saturated red, background as white.
    pub fn to_image(&self) -> RgbImage {
        let mut data = Vec::with_capacity(self.width * self.height * 3);
        for &l in &self.labels {
            data.extend_from_slice(if l != 0 { &[255, 0, 0] } else { &[255, 255, 255] });
        }
        RgbImage::new(self.width, self.height, data).expect("mask grid is non-empty")
    }
}

/// HSV saturation on a 0–255 scale: `round(255·(max − min)/max)`, 0 for black.
pub fn saturation(p: [u8; 3]) -> u8 {
    let max = *p.iter().max().expect("3 channels") as u32;
    let min = *p.iter().min().expect("3 channels") as u32;
    (255 * (max - min) + max / 2).checked_div(max).unwrap_or(0) as u8
}

/// Median over a `k × k` window (k odd) with replicated borders.
fn median_filter(values: &[u8], width: usize, height: usize, k: usize) -> Vec<u8> {
    if k <= 1 {
        return values.to_vec();
    }
    let r = (k / 2) as isize;
    let mut window = Vec::with_capacity(k * k);
    let mut out = vec![0u8; values.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            window.clear();
            for dy in -r..=r {
                let yy = (y + dy).clamp(0, height as isize - 1) as usize;
                for dx in -r..=r {
                    let xx = (x + dx).clamp(0, width as isize - 1) as usize;
                    window.push(values[yy * width + xx]);
                }
            }
            let mid = window.len() / 2;
            out[y as usize * width + x as usize] = *window.select_nth_unstable(mid).1;
        }
    }
    out
}

/// Dilation (`any`) or erosion (`all`) with a `k × k` square anchored at
/// `k/2`. Erosion uses the reflected square, so closing does not shift even
/// kernels. Pixels outside the grid are ignored.
fn morph(mask: &[bool], width: usize, height: usize, k: usize, dilate: bool) -> Vec<bool> {
    let anchor = (k / 2) as isize;
    let (lo, hi) = if dilate {
        (-anchor, k as isize - 1 - anchor)
    } else {
        (anchor + 1 - k as isize, anchor)
    };
    let pass = |src: &[bool], horizontal: bool| {
        let mut out = vec![false; src.len()];
        for y in 0..height {
            for x in 0..width {
                let mut acc = !dilate;
                for d in lo..=hi {
                    let (xx, yy) = if horizontal {
                        (x as isize + d, y as isize)
                    } else {
                        (x as isize, y as isize + d)
                    };
                    if xx < 0 || yy < 0 || xx >= width as isize || yy >= height as isize {
                        continue;
                    }
                    let v = src[yy as usize * width + xx as usize];
                    if dilate {
                        acc |= v;
                    } else {
                        acc &= v;
                    }
                }
                out[y * width + x] = acc;
            }
        }
        out
    };
    pass(&pass(mask, true), false)
}

/// Saturation threshold on the downsampled image, smoothed by a median
/// filter, closed with a square element, and reduced to regions of at
/// least `min_area` mask pixels. An all-background image gives an empty
/// mask.
pub fn segment_tissue(image: &RgbImage, params: &SegParams) -> Result<SegmentationMask> {
    params.validate()?;
    let small = image.downsample(params.downsample)?;
    let (w, h) = (small.width(), small.height());
    let sat: Vec<u8> = small.data().chunks(3).map(|p| saturation([p[0], p[1], p[2]])).collect();
    let smooth = median_filter(&sat, w, h, params.median_kernel);
    let binary: Vec<bool> = smooth.iter().map(|&s| s > params.saturation_threshold).collect();
    let dilated = morph(&binary, w, h, params.closing_kernel, true);
    let closed = morph(&dilated, w, h, params.closing_kernel, false);
    SegmentationMask::from_binary(
        w,
        h,
        &closed,
        params.downsample,
        (image.width(), image.height()),
        params.min_area,
    )
}

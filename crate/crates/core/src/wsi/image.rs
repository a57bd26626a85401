use crate::error::{ClamError, Result};

/// 8-bit RGB raster, row-major, three bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ClamError::dim(format!("image must be non-empty, got {width}×{height}")));
        }
        if data.len() != width * height * 3 {
            return Err(ClamError::dim(format!(
                "{}×{} image needs {} bytes, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        Self::new(width, height, color.repeat(width * height))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&color);
    }

    /// Paints the axis-aligned rectangle `[x0, x1) × [y0, y1)`, clipped.
    pub fn fill_rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, color: [u8; 3]) {
        for y in y0..y1.min(self.height) {
            for x in x0..x1.min(self.width) {
                self.set(x, y, color);
            }
        }
    }

    /// The `w × h` window with top-left corner `(x, y)`, which must fit.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<RgbImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(ClamError::dim(format!(
                "crop {w}×{h} at ({x}, {y}) outside {}×{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for row in y..y + h {
            let start = 3 * (row * self.width + x);
            data.extend_from_slice(&self.data[start..start + 3 * w]);
        }
        RgbImage::new(w, h, data)
    }

    /// Box-filter reduction by `factor`: output pixel `(i, j)` is the rounded
    /// mean of the input block `[i·f, (i+1)·f) × [j·f, (j+1)·f)`, clipped at
    /// the border. The output is `⌈w/f⌉ × ⌈h/f⌉`.
    pub fn downsample(&self, factor: usize) -> Result<RgbImage> {
        if factor == 0 {
            return Err(ClamError::config("downsample factor must be at least 1"));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        let mut data = Vec::with_capacity(w * h * 3);
        for j in 0..h {
            for i in 0..w {
                let mut sum = [0u64; 3];
                let mut count = 0u64;
                for y in j * factor..((j + 1) * factor).min(self.height) {
                    for x in i * factor..((i + 1) * factor).min(self.width) {
                        let p = self.get(x, y);
                        for c in 0..3 {
                            sum[c] += p[c] as u64;
                        }
                        count += 1;
                    }
                }
                for s in sum {
                    data.push(((2 * s + count) / (2 * count)) as u8);
                }
            }
        }
        RgbImage::new(w, h, data)
    }

    /// Binary PPM (`P6`, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    /// Parses a binary PPM with maxval 255. Comments (`#` to end of line)
    /// may appear between header fields.
    pub fn from_ppm(bytes: &[u8]) -> Result<RgbImage> {
        if bytes.len() < 2 || &bytes[..2] != b"P6" {
            return Err(ClamError::format(0, "not a binary PPM (missing P6 magic)"));
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for (i, field) in fields.iter_mut().enumerate() {
            // Skip whitespace and comments.
            loop {
                match bytes.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                            pos += 1;
                        }
                    }
                    _ => break,
                }
            }
            let start = pos;
            while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
                pos += 1;
            }
            if start == pos {
                return Err(ClamError::format(
                    pos as u64,
                    format!("expected header field {}", i + 1),
                ));
            }
            *field = std::str::from_utf8(&bytes[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ClamError::format(start as u64, "header number out of range"))?;
        }
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(ClamError::format(pos as u64, format!("unsupported maxval {maxval}")));
        }
        if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(ClamError::format(pos as u64, "missing whitespace after header"));
        }
        pos += 1;
        let need = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| ClamError::format(3, "image dimensions overflow"))?;
        if bytes.len() - pos != need {
            return Err(ClamError::format(
                bytes.len().min(pos + need) as u64,
                format!("expected {need} pixel bytes, found {}", bytes.len() - pos),
            ));
        }
        RgbImage::new(width, height, bytes[pos..].to_vec()).map_err(|e| ClamError::format(3, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip_and_comments() {
        let mut img = RgbImage::filled(3, 2, [1, 2, 3]).unwrap();
        img.set(2, 1, [255, 0, 7]);
        let bytes = img.to_ppm();
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(RgbImage::from_ppm(&bytes).unwrap(), img);

        let mut commented = b"P6 # made by hand\n3 2\n# maxval next\n255\n".to_vec();
        commented.extend_from_slice(img.data());
        assert_eq!(RgbImage::from_ppm(&commented).unwrap(), img);
    }

    #[test]
    fn ppm_errors() {
        assert!(matches!(
            RgbImage::from_ppm(b"P3\n1 1\n255\n"),
            Err(ClamError::Format { offset: 0, .. })
        ));
        let bytes = RgbImage::filled(2, 2, [9; 3]).unwrap().to_ppm();
        for cut in 0..bytes.len() {
            assert!(RgbImage::from_ppm(&bytes[..cut]).is_err());
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(RgbImage::from_ppm(&long).is_err());
        assert!(RgbImage::from_ppm(b"P6\n1 1\n65535\n\0\0\0\0\0\0").is_err());
    }

    #[test]
    fn crop_and_downsample() {
        let mut img = RgbImage::filled(5, 3, [10, 20, 30]).unwrap();
        img.set(4, 2, [250, 250, 250]);
        let c = img.crop(3, 1, 2, 2).unwrap();
        assert_eq!(c.get(1, 1), [250, 250, 250]);
        assert!(img.crop(4, 0, 2, 1).is_err());

        let d = img.downsample(2).unwrap();
        assert_eq!((d.width(), d.height()), (3, 2));
        assert_eq!(d.get(0, 0), [10, 20, 30]);
        // The bottom-right block holds the single pixel (4, 2).
        assert_eq!(d.get(2, 1), [250, 250, 250]);
    }
}

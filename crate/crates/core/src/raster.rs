//! 8-bit grayscale rasters and the PGM (P2/P5) codec.
//!
//! Coordinates follow the usual image convention: `x` is the column index,
//! `y` the row index, origin at the top-left sample, unit spacing.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RasterError {
    #[error("unsupported format: expected PGM magic P2 or P5")]
    UnsupportedFormat,
    #[error("malformed PGM: {0}")]
    Malformed(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
}

/// Rectangular grayscale image, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width.checked_mul(height).ok_or_else(|| {
            RasterError::InvalidImage(format!("dimensions {width}x{height} overflow"))
        })?;
        if pixels.len() != expected {
            return Err(RasterError::InvalidImage(format!(
                "expected {expected} pixels for {width}x{height}, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// All-zero image.
    pub fn zeros(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::new(width, height, vec![0; width.saturating_mul(height)])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, RasterError> {
        let mut pixels = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Panics if `(x, y)` is out of bounds.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        self.pixels[y * self.width + x] = value;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn max_intensity(&self) -> u8 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }

    /// True when the outermost `width` rows and columns are all zero.
    pub fn has_zero_border(&self, width: usize) -> bool {
        if 2 * width >= self.width || 2 * width >= self.height {
            return self.pixels.iter().all(|&v| v == 0);
        }
        (0..self.height).all(|y| {
            let row = self.row(y);
            if y < width || y >= self.height - width {
                row.iter().all(|&v| v == 0)
            } else {
                row[..width].iter().all(|&v| v == 0)
                    && row[self.width - width..].iter().all(|&v| v == 0)
            }
        })
    }
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// Netpbm header tokenizer; skips whitespace and `#` comments.
struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u64, RasterError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.bytes.get(self.pos) {
                None => RasterError::Malformed(format!("truncated before {what}")),
                Some(_) => RasterError::Malformed(format!("expected unsigned integer for {what}")),
            });
        }
        if let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_whitespace() && b != b'#' {
                return Err(RasterError::Malformed(format!(
                    "unexpected byte 0x{b:02x} in {what}"
                )));
            }
        }
        // Digits only, so the sole failure mode is overflow.
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| RasterError::Malformed(format!("{what} is out of range")))
    }
}

/// Rescales a sample from `[0, maxval]` to `[0, 255]`, rounding half up.
#[inline]
fn rescale(v: u64, maxval: u64) -> u8 {
    if maxval == 255 {
        return v as u8;
    }
    ((v * 255 * 2 + maxval) / (2 * maxval)) as u8
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(RasterError::UnsupportedFormat),
    };
    let mut tokens = Tokens { bytes, pos: 2 };
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        Some(_) => return Err(RasterError::UnsupportedFormat),
        None => return Err(RasterError::Malformed("truncated after magic".into())),
    }
    let width = tokens.next_uint("width")?;
    let height = tokens.next_uint("height")?;
    let maxval = tokens.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(RasterError::Malformed(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(RasterError::Malformed(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = usize::try_from(width)
        .ok()
        .zip(usize::try_from(height).ok())
        .and_then(|(w, h)| w.checked_mul(h))
        .filter(|&n| n <= isize::MAX as usize / 2)
        .ok_or_else(|| RasterError::Malformed(format!("dimensions {width}x{height} too large")))?;

    let mut pixels = Vec::with_capacity(count.min(bytes.len()));
    if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        tokens.pos += 1;
        let data = bytes.get(tokens.pos..).unwrap_or(&[]);
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        if data.len() < count * sample_bytes {
            return Err(RasterError::Malformed(format!(
                "truncated raster: need {} bytes, have {}",
                count * sample_bytes,
                data.len()
            )));
        }
        for i in 0..count {
            let v = if sample_bytes == 1 {
                u64::from(data[i])
            } else {
                u64::from(u16::from_be_bytes([data[2 * i], data[2 * i + 1]]))
            };
            if v > maxval {
                return Err(RasterError::Malformed(format!(
                    "sample {v} at index {i} exceeds maxval {maxval}"
                )));
            }
            pixels.push(rescale(v, maxval));
        }
    } else {
        for i in 0..count {
            let v = tokens.next_uint("sample")?;
            if v > maxval {
                return Err(RasterError::Malformed(format!(
                    "sample {v} at index {i} exceeds maxval {maxval}"
                )));
            }
            pixels.push(rescale(v, maxval));
        }
    }
    GrayImage::new(width as usize, height as usize, pixels)
        .map_err(|e| RasterError::Malformed(e.to_string()))
}

/// Encodes with maxval 255. Text output writes one raster row per line.
pub fn encode_pgm(img: &GrayImage, binary: bool) -> Vec<u8> {
    let header = format!(
        "{}\n{} {}\n255\n",
        if binary { "P5" } else { "P2" },
        img.width(),
        img.height()
    );
    let mut out = header.into_bytes();
    if binary {
        out.extend_from_slice(img.pixels());
        return out;
    }
    for y in 0..img.height() {
        let line = img
            .row(y)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    out
}

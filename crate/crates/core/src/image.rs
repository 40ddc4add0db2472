//! 8-bit grayscale rasters, binary PGM decoding and bilinear resampling.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Width of the working frame faces are resampled to before extraction.
pub const WORKING_WIDTH: usize = 100;
/// Height of the working frame.
pub const WORKING_HEIGHT: usize = 140;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if pixels.len() != width * height {
            return Err(Error::CorruptData(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel; values are rounded and clamped.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).round().clamp(0.0, 255.0) as u8);
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Reads a binary PGM (`P5`) file.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

/// Decodes a binary PGM stream. Samples are rescaled to 0..=255 when maxval is below 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::UnsupportedFormat(format!(
            "expected magic P5, found {magic:?}"
        )));
    }
    let mut cursor = HeaderCursor { bytes, pos: 2 };
    let width = cursor.next_number()?;
    let height = cursor.next_number()?;
    let maxval = cursor.next_number()?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval {maxval} (only 1..=255 supported)"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(Error::CorruptData("missing raster separator".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::CorruptData("dimensions overflow".into()))?;
    let payload = &bytes[cursor.pos..];
    if payload.len() < expected {
        return Err(Error::CorruptData(format!(
            "header promises {expected} bytes, payload has {}",
            payload.len()
        )));
    }
    let mut pixels = payload[..expected].to_vec();
    if maxval != 255 {
        for p in &mut pixels {
            *p = ((u32::from((*p).min(maxval as u8)) * 255 + maxval as u32 / 2) / maxval as u32) as u8;
        }
    }
    Image::new(width, height, pixels)
}

/// Encodes as canonical binary PGM: `P5\n<w> <h>\n255\n` followed by the raster.
pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::CorruptData(format!(
                "expected a header number at byte {start}"
            )));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptData("header number out of range".into()))
    }
}

/// Bilinear resampling to `target_w` x `target_h`; sample coordinates are clamped at the borders.
pub fn resize(image: &Image, target_w: usize, target_h: usize) -> Result<Image> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidDimensions {
            width: target_w,
            height: target_h,
        });
    }
    let sx = image.width as f64 / target_w as f64;
    let sy = image.height as f64 / target_h as f64;
    let max_x = (image.width - 1) as f64;
    let max_y = (image.height - 1) as f64;
    Image::from_fn(target_w, target_h, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(image.width - 1);
        let y1 = (y0 + 1).min(image.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let p = |x: usize, y: usize| f64::from(image.get(x, y));
        let top = p(x0, y0) * (1.0 - tx) + p(x1, y0) * tx;
        let bottom = p(x0, y1) * (1.0 - tx) + p(x1, y1) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// Resamples to the 100x140 portrait working frame.
pub fn to_working_frame(image: &Image) -> Result<Image> {
    resize(image, WORKING_WIDTH, WORKING_HEIGHT)
}

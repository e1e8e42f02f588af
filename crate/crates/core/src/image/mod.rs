//! Grid types shared by the whole pipeline.
//!
//! [`GrayImage`] is the 8-bit currency passed between stages. It carries the
//! physical resolution of one quantization level (`scale`) and the physical
//! value of level zero (`offset`) so that height maps and thermograms can be
//! converted back to micrometres or degrees. [`FloatField`] is the
//! pre-quantization representation.

mod pgm;
mod rng;

pub use pgm::{load_pgm, read_pgm, save_pgm, write_pgm};
pub use rng::Rng;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("data length {actual} does not match {width}x{height}")]
    LengthMismatch {
        width: usize,
        height: usize,
        actual: usize,
    },
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("offset must be finite, got {0}")]
    InvalidOffset(f64),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("crop rectangle ({x0},{y0}) {w}x{h} exceeds {width}x{height} image")]
    CropOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rounds half-up (`2.5 -> 3`, `-2.5 -> -2`).
#[inline]
pub fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Converts a real level to a byte with half-up rounding and clamping.
#[inline]
pub fn to_level(v: f64) -> u8 {
    round_half_up(v).clamp(0.0, 255.0) as u8
}

/// 8-bit grayscale image with physical-scale metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
    scale: f64,
    offset: f64,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::LengthMismatch {
                width,
                height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
            scale: 1.0,
            offset: 0.0,
        })
    }

    pub fn filled(width: usize, height: usize, level: u8) -> Self {
        Self {
            width,
            height,
            data: vec![level; width * height],
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
            scale: 1.0,
            offset: 0.0,
        }
    }

    /// Attaches physical metadata.
    pub fn with_scale(mut self, scale: f64, offset: f64) -> Result<Self, ImageError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ImageError::InvalidScale(scale));
        }
        if !offset.is_finite() {
            return Err(ImageError::InvalidOffset(offset));
        }
        self.scale = scale;
        self.offset = offset;
        Ok(self)
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

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Physical value (`offset + scale * level`) of a pixel.
    #[inline]
    pub fn physical(&self, x: usize, y: usize) -> f64 {
        self.offset + self.scale * f64::from(self.get(x, y))
    }

    /// Whole image in physical units.
    pub fn to_physical(&self) -> FloatField {
        FloatField {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&l| self.offset + self.scale * f64::from(l))
                .collect(),
        }
    }

    /// Raw levels as reals, ignoring physical metadata.
    pub fn to_levels(&self) -> FloatField {
        FloatField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&l| f64::from(l)).collect(),
        }
    }

    /// Horizontal mirror: column `j` moves to `width - 1 - j`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            let row = &mut out.data[y * self.width..(y + 1) * self.width];
            row.reverse();
        }
        out
    }
}

/// Real-valued grid in physical units.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::LengthMismatch {
                width,
                height,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a field from `f(x, y)`. Panics if `f` yields a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                assert!(v.is_finite(), "non-finite field value at ({x},{y})");
                data.push(v);
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped to the nearest edge pixel.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Common view over the two grid kinds, used by cropping and resampling.
pub trait Raster: Sized {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    /// Stored value at `(x, y)`: the level for 8-bit images, the real value for fields.
    fn value(&self, x: usize, y: usize) -> f64;
    /// New raster of the same kind and metadata from real values.
    /// 8-bit rasters round half-up and clamp to `[0, 255]`.
    fn rebuild(&self, width: usize, height: usize, values: Vec<f64>) -> Self;

    /// Copies the `w`x`h` rectangle anchored at `(x0, y0)`.
    fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self, ImageError> {
        if w == 0 || h == 0 || x0 + w > self.width() || y0 + h > self.height() {
            return Err(ImageError::CropOutOfBounds {
                x0,
                y0,
                w,
                h,
                width: self.width(),
                height: self.height(),
            });
        }
        let mut values = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                values.push(self.value(x, y));
            }
        }
        Ok(self.rebuild(w, h, values))
    }
}

impl Raster for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn value(&self, x: usize, y: usize) -> f64 {
        f64::from(self.get(x, y))
    }
    fn rebuild(&self, width: usize, height: usize, values: Vec<f64>) -> Self {
        Self {
            width,
            height,
            data: values.into_iter().map(to_level).collect(),
            scale: self.scale,
            offset: self.offset,
        }
    }
}

impl Raster for FloatField {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn value(&self, x: usize, y: usize) -> f64 {
        self.get(x, y)
    }
    fn rebuild(&self, width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            data: values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(127.5), 128.0);
        assert_eq!(round_half_up(-2.5), -2.0);
        assert_eq!(to_level(-3.0), 0);
        assert_eq!(to_level(300.0), 255);
        assert_eq!(to_level(254.49), 254);
    }

    #[test]
    fn length_is_checked() {
        assert!(matches!(
            GrayImage::new(2, 2, vec![0; 3]),
            Err(ImageError::LengthMismatch { .. })
        ));
        assert!(FloatField::new(1, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn scale_must_be_positive() {
        assert!(GrayImage::filled(1, 1, 0).with_scale(0.0, 0.0).is_err());
        assert!(GrayImage::filled(1, 1, 0).with_scale(-1.0, 0.0).is_err());
        let img = GrayImage::filled(1, 1, 10).with_scale(1.57, -5.0).unwrap();
        assert!((img.physical(0, 0) - (-5.0 + 15.7)).abs() < 1e-12);
    }

    #[test]
    fn crop_preserves_metadata() {
        let img = GrayImage::from_fn(4, 3, |x, y| (10 * y + x) as u8)
            .with_scale(0.5, 2.0)
            .unwrap();
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.data(), &[11, 12, 21, 22]);
        assert_eq!(c.scale(), 0.5);
        assert_eq!(c.offset(), 2.0);
        assert!(img.crop(3, 0, 2, 1).is_err());
        assert!(img.crop(0, 0, 0, 1).is_err());
    }

    #[test]
    fn mirror_reverses_columns() {
        let img = GrayImage::from_fn(3, 2, |x, y| (x + 3 * y) as u8);
        assert_eq!(img.mirrored().data(), &[2, 1, 0, 5, 4, 3]);
    }
}

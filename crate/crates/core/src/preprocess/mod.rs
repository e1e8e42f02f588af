//! Image preparation chain: translation stabilization, dataset-level
//! normalization, cropping, bicubic resampling and 8-bit quantization.

mod flow;
mod resample;

pub use flow::lk_shift;
pub use resample::{resample_bicubic, sample_bicubic};

use thiserror::Error;

use crate::image::{to_level, FloatField, GrayImage, ImageError};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("size mismatch: expected {expected:?}, found {found:?}")]
    SizeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("untrackable: singular normal matrix at pyramid level {level}")]
    Untrackable { level: usize },
    #[error("optical flow diverged")]
    Diverged,
    #[error("empty image list")]
    EmptyDataset,
    #[error("degenerate range: every pixel equals {0}")]
    DegenerateRange(f64),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Translation in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shift {
    pub dx: f64,
    pub dy: f64,
}

impl Shift {
    pub const ZERO: Shift = Shift { dx: 0.0, dy: 0.0 };
}

/// Resamples `img` so that `out(p) = img(p + s)`, i.e. content moves by
/// `(-dx, -dy)`. Samples outside the grid clamp to the nearest edge value.
pub fn apply_shift(img: &FloatField, s: Shift) -> FloatField {
    if s == Shift::ZERO {
        return img.clone();
    }
    FloatField::from_fn(img.width(), img.height(), |x, y| {
        sample_bicubic(img, x as f64 + s.dx, y as f64 + s.dy)
    })
}

/// Global range over a whole dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationStats {
    pub global_min: f64,
    pub global_max: f64,
}

impl NormalizationStats {
    pub fn new(global_min: f64, global_max: f64) -> Result<Self, PreprocessError> {
        if !(global_min.is_finite() && global_max.is_finite()) {
            return Err(PreprocessError::InvalidParameter(
                "normalization bounds must be finite".into(),
            ));
        }
        if global_max <= global_min {
            return Err(PreprocessError::DegenerateRange(global_min));
        }
        Ok(Self {
            global_min,
            global_max,
        })
    }

    /// Physical size of one 8-bit level.
    pub fn scale(&self) -> f64 {
        (self.global_max - self.global_min) / 255.0
    }
}

pub fn dataset_stats<'a>(
    images: impl IntoIterator<Item = &'a FloatField>,
) -> Result<NormalizationStats, PreprocessError> {
    let mut seen = false;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for img in images {
        seen = true;
        let (a, b) = img.min_max();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if !seen {
        return Err(PreprocessError::EmptyDataset);
    }
    NormalizationStats::new(lo, hi)
}

/// Maps `[min, max]` onto levels `[0, 255]` with half-up rounding.
pub fn quantize(img: &FloatField, stats: &NormalizationStats) -> GrayImage {
    let range = stats.global_max - stats.global_min;
    let data = img
        .data()
        .iter()
        .map(|&v| to_level((v - stats.global_min) / range * 255.0))
        .collect();
    GrayImage::new(img.width(), img.height(), data)
        .and_then(|g| g.with_scale(stats.scale(), stats.global_min))
        .expect("validated stats yield a valid image")
}

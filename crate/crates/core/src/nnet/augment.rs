use super::NnetError;
use crate::image::{round_half_up, GrayImage, Raster, Rng};
use crate::preprocess::resample_bicubic;

/// Random jitter and mirroring applied identically to both images of a pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentConfig {
    /// Upscale factor before cropping back to the original size.
    pub jitter_scale: f64,
    pub mirror_prob: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            jitter_scale: 1.125,
            mirror_prob: 0.5,
        }
    }
}

/// One drawn transform: crop anchor in the upscaled image and mirror flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentParams {
    pub offset_x: usize,
    pub offset_y: usize,
    pub mirror: bool,
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), NnetError> {
        if !(self.jitter_scale >= 1.0 && self.jitter_scale.is_finite()) {
            return Err(NnetError::Config(format!(
                "jitter_scale must be >= 1, got {}",
                self.jitter_scale
            )));
        }
        if !(0.0..=1.0).contains(&self.mirror_prob) {
            return Err(NnetError::Config(format!(
                "mirror_prob must lie in [0, 1], got {}",
                self.mirror_prob
            )));
        }
        Ok(())
    }

    /// Side of the upscaled image for an input of side `size`.
    pub fn jitter_size(&self, size: usize) -> usize {
        round_half_up(self.jitter_scale * size as f64) as usize
    }

    /// Draws crop offsets uniformly over the valid range, then the mirror flag.
    pub fn draw(&self, size: usize, rng: &mut Rng) -> AugmentParams {
        let slack = self.jitter_size(size) - size;
        AugmentParams {
            offset_x: rng.below(slack + 1),
            offset_y: rng.below(slack + 1),
            mirror: rng.bernoulli(self.mirror_prob),
        }
    }
}

/// Applies a fixed transform to a pair of equally sized square images.
pub fn augment_with(
    x: &GrayImage,
    y: &GrayImage,
    params: AugmentParams,
    cfg: &AugmentConfig,
) -> Result<(GrayImage, GrayImage), NnetError> {
    cfg.validate()?;
    let s = x.width();
    if (x.width(), x.height()) != (y.width(), y.height()) || x.height() != s {
        return Err(NnetError::Shape(format!(
            "pair must be two equal square images, got {}x{} and {}x{}",
            x.width(),
            x.height(),
            y.width(),
            y.height()
        )));
    }
    let j = cfg.jitter_size(s);
    let one = |img: &GrayImage| -> Result<GrayImage, NnetError> {
        let big = if j == s {
            img.clone()
        } else {
            resample_bicubic(img, j, j)
        };
        let cropped = big.crop(params.offset_x, params.offset_y, s, s)?;
        Ok(if params.mirror {
            cropped.mirrored()
        } else {
            cropped
        })
    };
    Ok((one(x)?, one(y)?))
}

/// Draws a transform from `rng` and applies it to both images.
pub fn augment_pair(
    x: &GrayImage,
    y: &GrayImage,
    rng: &mut Rng,
    cfg: &AugmentConfig,
) -> Result<(GrayImage, GrayImage), NnetError> {
    cfg.validate()?;
    let params = cfg.draw(x.width(), rng);
    augment_with(x, y, params, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn pair(s: usize) -> (GrayImage, GrayImage) {
        (
            GrayImage::from_fn(s, s, |x, y| (x * 7 + y * 3) as u8),
            GrayImage::from_fn(s, s, |x, y| (200 - x * 2 - y) as u8),
        )
    }

    #[test]
    fn degenerate_transform_is_identity() {
        let (x, y) = pair(32);
        let cfg = AugmentConfig {
            jitter_scale: 1.0,
            mirror_prob: 0.0,
        };
        let mut rng = Rng::new(1);
        let (a, b) = augment_pair(&x, &y, &mut rng, &cfg).unwrap();
        assert_eq!((a, b), (x, y));
    }

    #[test]
    fn zero_offset_jitter_stays_close_to_a_zoom() {
        // with offsets pinned to 0 the crop is the top-left of the upscaled image
        let (x, y) = pair(32);
        let cfg = AugmentConfig::default();
        let p = AugmentParams {
            offset_x: 0,
            offset_y: 0,
            mirror: false,
        };
        let (a, _) = augment_with(&x, &y, p, &cfg).unwrap();
        let big = resample_bicubic(&x, 36, 36);
        assert_eq!(a, big.crop(0, 0, 32, 32).unwrap());
    }

    #[test]
    fn mirror_acts_on_both() {
        let (x, y) = pair(16);
        let cfg = AugmentConfig {
            jitter_scale: 1.0,
            mirror_prob: 1.0,
        };
        let (a, b) = augment_pair(&x, &y, &mut Rng::new(2), &cfg).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                assert_eq!(a.get(c, r), x.get(15 - c, r));
                assert_eq!(b.get(c, r), y.get(15 - c, r));
            }
        }
    }

    #[test]
    fn same_crop_on_both_images() {
        let x = GrayImage::from_fn(32, 32, |c, r| ((c * 13 + r * 29) % 256) as u8);
        let cfg = AugmentConfig::default();
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let (a, b) = augment_pair(&x, &x, &mut rng, &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn offsets_are_uniform() {
        let cfg = AugmentConfig::default();
        let mut rng = Rng::new(4);
        let slack = cfg.jitter_size(32) - 32;
        assert_eq!(slack, 4);
        let mut counts = vec![0usize; slack + 1];
        let n = 1000;
        for _ in 0..n {
            let p = cfg.draw(32, &mut rng);
            counts[p.offset_x] += 1;
        }
        let e = n as f64 / counts.len() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        let dist = ChiSquared::new(slack as f64).unwrap();
        assert!(1.0 - dist.cdf(chi2) > 0.01);
    }

    #[test]
    fn invalid_inputs() {
        let (x, _) = pair(16);
        let (y, _) = pair(8);
        let cfg = AugmentConfig::default();
        assert!(augment_pair(&x, &y, &mut Rng::new(0), &cfg).is_err());
        let bad = AugmentConfig {
            jitter_scale: 0.5,
            mirror_prob: 0.5,
        };
        assert!(augment_pair(&x, &x, &mut Rng::new(0), &bad).is_err());
    }
}

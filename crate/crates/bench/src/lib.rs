//! Benchmark fixtures shared by the criterion targets.

use thermogeo_core::{GrayImage, Rng};

/// Noise image with a smooth ramp so texture features are well defined.
pub fn textured_image(size: usize, seed: u64) -> GrayImage {
    let mut rng = Rng::new(seed);
    GrayImage::from_fn(size, size, |x, y| {
        let ramp = 2.0 * (x + y) as f64 / size as f64 * 50.0;
        (ramp + rng.uniform(0.0, 100.0)).min(255.0) as u8
    })
}

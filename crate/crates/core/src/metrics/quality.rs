//! Full-reference similarity: SSIM and PSNR on 8-bit images.

use super::MetricError;
use crate::image::GrayImage;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const L: f64 = 255.0;

fn gaussian_taps() -> [f64; WINDOW] {
    let c = (WINDOW / 2) as f64;
    let mut g = [0.0; WINDOW];
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable "valid" filtering with the normalized Gaussian window.
fn filter_valid(src: &[f64], w: usize, h: usize, g: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut horiz = vec![0.0; h * ow];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = g.iter().zip(&row[x..x + WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..WINDOW).map(|k| g[k] * horiz[(y + k) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity over the valid region (11x11 Gaussian window,
/// sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255).
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricError> {
    let (w, h) = (a.width(), a.height());
    if (w, h) != (b.width(), b.height()) {
        return Err(MetricError::SizeMismatch);
    }
    if w < WINDOW || h < WINDOW {
        return Err(MetricError::InvalidInput(format!(
            "SSIM needs at least {WINDOW}x{WINDOW} pixels, got {w}x{h}"
        )));
    }
    let g = gaussian_taps();
    let x: Vec<f64> = a.data().iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = b.data().iter().map(|&v| f64::from(v)).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(&x, w, h, &g);
    let mu_y = filter_valid(&y, w, h, &g);
    let e_xx = filter_valid(&xx, w, h, &g);
    let e_yy = filter_valid(&yy, w, h, &g);
    let e_xy = filter_valid(&xy, w, h, &g);

    let c1 = (K1 * L).powi(2);
    let c2 = (K2 * L).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total +=
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricError> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(MetricError::SizeMismatch);
    }
    let se: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| (f64::from(p) - f64::from(q)).powi(2))
        .sum();
    if se == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = se / a.data().len() as f64;
    Ok(10.0 * (L * L / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rng;

    fn random(seed: u64, w: usize, h: usize) -> GrayImage {
        let mut r = Rng::new(seed);
        GrayImage::from_fn(w, h, |_, _| r.below(256) as u8)
    }

    #[test]
    fn self_similarity() {
        let a = random(1, 40, 30);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn black_versus_white() {
        let s = ssim(
            &GrayImage::filled(16, 16, 0),
            &GrayImage::filled(16, 16, 255),
        )
        .unwrap();
        let c1 = 6.5025;
        assert!((s - c1 / (255.0 * 255.0 + c1)).abs() < 1e-15);
        assert!((s - 1.0e-4).abs() < 1e-6);
    }

    #[test]
    fn symmetric_and_bounded() {
        let a = random(2, 24, 24);
        let b = random(3, 24, 24);
        let ab = ssim(&a, &b).unwrap();
        assert!((ab - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!(ab > -1.0 && ab <= 1.0);
    }

    #[test]
    fn unit_offset_psnr() {
        let a = GrayImage::from_fn(9, 9, |x, y| (x * 20 + y) as u8);
        let b = GrayImage::from_fn(9, 9, |x, y| (x * 20 + y + 1) as u8);
        let p = psnr(&a, &b).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((p - 48.1308).abs() < 1e-3);
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let base = GrayImage::from_fn(32, 32, |x, y| (64 + x * 2 + y * 2) as u8);
        let mut last = f64::INFINITY;
        for amp in [1i32, 2, 4, 8] {
            let mut r = Rng::new(10);
            let noisy = GrayImage::from_fn(32, 32, |x, y| {
                let sign = if r.bernoulli(0.5) { 1 } else { -1 };
                (i32::from(base.get(x, y)) + sign * amp) as u8
            });
            let p = psnr(&base, &noisy).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn size_errors() {
        let a = GrayImage::filled(10, 12, 0);
        assert!(matches!(ssim(&a, &a), Err(MetricError::InvalidInput(_))));
        let b = GrayImage::filled(12, 12, 0);
        assert!(matches!(psnr(&a, &b), Err(MetricError::SizeMismatch)));
        assert!(matches!(
            ssim(&b, &GrayImage::filled(12, 11, 0)),
            Err(MetricError::SizeMismatch)
        ));
    }
}

//! Pyramidal Lucas-Kanade estimation of a single global translation.

use super::resample::sample_bicubic;
use super::{PreprocessError, Shift};
use crate::image::FloatField;

/// Coarsest pyramid levels are not built below this size.
const MIN_LEVEL_SIZE: usize = 8;
const CONVERGED: f64 = 1e-5;

/// 5-tap binomial blur followed by 2x decimation.
fn downsample(f: &FloatField) -> FloatField {
    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let (w, h) = (f.width(), f.height());
    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            horiz[y * w + x] = (0..5)
                .map(|k| K[k] * f.get_clamped(x as isize + k as isize - 2, y as isize))
                .sum();
        }
    }
    let tmp = FloatField::new(w, h, horiz).expect("blur preserves finiteness");
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    FloatField::from_fn(ow, oh, |x, y| {
        (0..5)
            .map(|k| K[k] * tmp.get_clamped(2 * x as isize, 2 * y as isize + k as isize - 2))
            .sum()
    })
}

fn pyramid(f: &FloatField, levels: usize) -> Vec<FloatField> {
    let mut out = vec![f.clone()];
    while out.len() < levels {
        let last = out.last().unwrap();
        if last.width().min(last.height()) / 2 < MIN_LEVEL_SIZE {
            break;
        }
        out.push(downsample(last));
    }
    out
}

/// Estimates the translation `d` such that `frame(p + d) ~ template(p)`.
///
/// `window` is the half-width of the square tracking window centred on the
/// image, in pixels of each pyramid level. `apply_shift(frame, d)` then brings
/// the frame onto the template.
pub fn lk_shift(
    template: &FloatField,
    frame: &FloatField,
    levels: usize,
    window: usize,
    iters: usize,
) -> Result<Shift, PreprocessError> {
    if (template.width(), template.height()) != (frame.width(), frame.height()) {
        return Err(PreprocessError::SizeMismatch {
            expected: (template.width(), template.height()),
            found: (frame.width(), frame.height()),
        });
    }
    if window < 2 {
        return Err(PreprocessError::InvalidParameter(format!(
            "window half-width must be >= 2, got {window}"
        )));
    }
    if levels < 1 {
        return Err(PreprocessError::InvalidParameter(
            "at least one pyramid level is required".into(),
        ));
    }
    if template.width() < 4 || template.height() < 4 {
        return Err(PreprocessError::InvalidParameter(
            "images must be at least 4x4 to track".into(),
        ));
    }

    let tp = pyramid(template, levels);
    let fp = pyramid(frame, tp.len());
    let mut guess = (0.0, 0.0);

    for level in (0..tp.len()).rev() {
        let t = &tp[level];
        let f = &fp[level];
        let (w, h) = (t.width(), t.height());
        let cx = (w - 1) / 2;
        let cy = (h - 1) / 2;
        let x_lo = cx.saturating_sub(window).max(1);
        let x_hi = (cx + window).min(w - 2);
        let y_lo = cy.saturating_sub(window).max(1);
        let y_hi = (cy + window).min(h - 2);

        // template gradients and normal matrix are fixed per level
        let mut pts = Vec::with_capacity((x_hi - x_lo + 1) * (y_hi - y_lo + 1));
        let (mut gxx, mut gxy, mut gyy) = (0.0, 0.0, 0.0);
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let ix = 0.5 * (t.get(x + 1, y) - t.get(x - 1, y));
                let iy = 0.5 * (t.get(x, y + 1) - t.get(x, y - 1));
                gxx += ix * ix;
                gxy += ix * iy;
                gyy += iy * iy;
                pts.push((x, y, ix, iy, t.get(x, y)));
            }
        }
        let det = gxx * gyy - gxy * gxy;
        let trace = gxx + gyy;
        if !(trace > 1e-12 && det > 1e-9 * trace * trace) {
            return Err(PreprocessError::Untrackable { level });
        }

        let (mut dx, mut dy) = guess;
        for _ in 0..iters {
            let (mut bx, mut by) = (0.0, 0.0);
            for &(x, y, ix, iy, tv) in &pts {
                let err = tv - sample_bicubic(f, x as f64 + dx, y as f64 + dy);
                bx += ix * err;
                by += iy * err;
            }
            let ex = (gyy * bx - gxy * by) / det;
            let ey = (gxx * by - gxy * bx) / det;
            dx += ex;
            dy += ey;
            if !(dx.is_finite() && dy.is_finite()) {
                return Err(PreprocessError::Diverged);
            }
            if ex.hypot(ey) < CONVERGED {
                break;
            }
        }
        guess = if level > 0 {
            (2.0 * dx, 2.0 * dy)
        } else {
            (dx, dy)
        };
    }

    let (dx, dy) = guess;
    if dx.abs() >= template.width() as f64 || dy.abs() >= template.height() as f64 {
        return Err(PreprocessError::Diverged);
    }
    Ok(Shift { dx, dy })
}

//! Gray-level co-occurrence matrices and the Haralick texture features
//! f1-f13 (the maximal correlation coefficient f14 is not computed).
//!
//! Gray levels are indexed from 0, so the sum average ranges over
//! `[0, 2 * (levels - 1)]`. Logarithms are natural with a `1e-12` guard.

use super::MetricError;
use crate::image::GrayImage;

const LOG_EPS: f64 = 1e-12;

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * (p + LOG_EPS).ln()
    } else {
        0.0
    }
}

/// Normalized symmetric co-occurrence matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Glcm {
    levels: usize,
    matrix: Vec<f64>,
    offsets: Vec<(isize, isize)>,
}

/// The four standard directions (0, 45, 90 and 135 degrees) at `distance`;
/// `y` grows downwards.
pub fn standard_offsets(distance: usize) -> [(isize, isize); 4] {
    let d = distance as isize;
    [(d, 0), (d, -d), (0, -d), (-d, -d)]
}

/// Co-occurrences over the four standard directions, each direction
/// normalized separately and then averaged.
pub fn glcm(img: &GrayImage, levels: usize, distance: usize) -> Result<Glcm, MetricError> {
    if distance == 0 {
        return Err(MetricError::InvalidInput(
            "GLCM distance must be >= 1".into(),
        ));
    }
    if img.width() < distance + 1 && img.height() < distance + 1 {
        return Err(MetricError::InvalidInput(format!(
            "{}x{} image too small for distance {distance}",
            img.width(),
            img.height()
        )));
    }
    glcm_with_offsets(img, levels, &standard_offsets(distance))
}

/// Co-occurrences over explicit `(dx, dy)` offsets. `levels` must be a power
/// of two in `[2, 256]`; intensities are requantized by `floor(l * levels / 256)`.
pub fn glcm_with_offsets(
    img: &GrayImage,
    levels: usize,
    offsets: &[(isize, isize)],
) -> Result<Glcm, MetricError> {
    if !(2..=256).contains(&levels) || !levels.is_power_of_two() {
        return Err(MetricError::InvalidInput(format!(
            "GLCM levels must be a power of two in [2, 256], got {levels}"
        )));
    }
    let q: Vec<usize> = img
        .data()
        .iter()
        .map(|&l| l as usize * levels / 256)
        .collect();
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut matrix = vec![0.0; levels * levels];
    let mut used = 0usize;
    let mut counts = vec![0.0; levels * levels];
    for &(dx, dy) in offsets {
        counts.iter_mut().for_each(|c| *c = 0.0);
        let mut pairs = 0usize;
        for y in 0..h {
            let y2 = y + dy;
            if y2 < 0 || y2 >= h {
                continue;
            }
            for x in 0..w {
                let x2 = x + dx;
                if x2 < 0 || x2 >= w {
                    continue;
                }
                let a = q[(y * w + x) as usize];
                let b = q[(y2 * w + x2) as usize];
                counts[a * levels + b] += 1.0;
                counts[b * levels + a] += 1.0;
                pairs += 1;
            }
        }
        if pairs == 0 {
            continue;
        }
        let total = 2.0 * pairs as f64;
        for (m, c) in matrix.iter_mut().zip(&counts) {
            *m += c / total;
        }
        used += 1;
    }
    if used == 0 {
        return Err(MetricError::InvalidInput(
            "no pixel pairs for the requested offsets".into(),
        ));
    }
    matrix.iter_mut().for_each(|m| *m /= used as f64);
    Ok(Glcm {
        levels,
        matrix,
        offsets: offsets.to_vec(),
    })
}

/// Marginal and sum/difference distributions of a GLCM.
struct Marginals {
    px: Vec<f64>,
    py: Vec<f64>,
    p_sum: Vec<f64>,
    p_diff: Vec<f64>,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.levels;
        self.matrix
            .iter()
            .enumerate()
            .map(move |(idx, &p)| ((idx / n) as f64, (idx % n) as f64, p))
    }

    fn marginals(&self) -> Marginals {
        let n = self.levels;
        let mut m = Marginals {
            px: vec![0.0; n],
            py: vec![0.0; n],
            p_sum: vec![0.0; 2 * n - 1],
            p_diff: vec![0.0; n],
        };
        for i in 0..n {
            for j in 0..n {
                let p = self.p(i, j);
                m.px[i] += p;
                m.py[j] += p;
                m.p_sum[i + j] += p;
                m.p_diff[i.abs_diff(j)] += p;
            }
        }
        m
    }

    fn mean_var(dist: &[f64]) -> (f64, f64) {
        let mean: f64 = dist.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let var = dist
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(2) * p)
            .sum();
        (mean, var)
    }

    /// f1, angular second moment.
    pub fn energy(&self) -> f64 {
        self.matrix.iter().map(|p| p * p).sum()
    }

    /// f2.
    pub fn contrast(&self) -> f64 {
        self.cells().map(|(i, j, p)| (i - j) * (i - j) * p).sum()
    }

    /// f3; undefined when a marginal has zero variance.
    pub fn correlation(&self) -> Result<f64, MetricError> {
        let m = self.marginals();
        let (mx, vx) = Self::mean_var(&m.px);
        let (my, vy) = Self::mean_var(&m.py);
        if vx <= 0.0 || vy <= 0.0 {
            return Err(MetricError::UndefinedMetric(
                "GLCM correlation with zero marginal variance".into(),
            ));
        }
        let cov: f64 = self.cells().map(|(i, j, p)| (i - mx) * (j - my) * p).sum();
        Ok(cov / (vx.sqrt() * vy.sqrt()))
    }

    /// f4, sum of squares: variance about the row mean.
    pub fn sum_of_squares(&self) -> f64 {
        let (mx, _) = Self::mean_var(&self.marginals().px);
        self.cells().map(|(i, _, p)| (i - mx) * (i - mx) * p).sum()
    }

    /// f5, inverse difference moment.
    pub fn homogeneity(&self) -> f64 {
        self.cells()
            .map(|(i, j, p)| p / (1.0 + (i - j) * (i - j)))
            .sum()
    }

    /// f6.
    pub fn sum_average(&self) -> f64 {
        Self::mean_var(&self.marginals().p_sum).0
    }

    /// f7, taken about the sum average.
    pub fn sum_variance(&self) -> f64 {
        Self::mean_var(&self.marginals().p_sum).1
    }

    /// f8.
    pub fn sum_entropy(&self) -> f64 {
        -self
            .marginals()
            .p_sum
            .iter()
            .map(|&p| plogp(p))
            .sum::<f64>()
    }

    /// f9.
    pub fn entropy(&self) -> f64 {
        -self.matrix.iter().map(|&p| plogp(p)).sum::<f64>()
    }

    /// f10, variance of the difference distribution.
    pub fn difference_variance(&self) -> f64 {
        Self::mean_var(&self.marginals().p_diff).1
    }

    /// f11.
    pub fn difference_entropy(&self) -> f64 {
        -self
            .marginals()
            .p_diff
            .iter()
            .map(|&p| plogp(p))
            .sum::<f64>()
    }

    fn info_terms(&self) -> (f64, f64, f64, f64, f64) {
        let m = self.marginals();
        let hxy = self.entropy();
        let hx = -m.px.iter().map(|&p| plogp(p)).sum::<f64>();
        let hy = -m.py.iter().map(|&p| plogp(p)).sum::<f64>();
        let (mut hxy1, mut hxy2) = (0.0, 0.0);
        for i in 0..self.levels {
            for j in 0..self.levels {
                let pp = m.px[i] * m.py[j];
                if pp > 0.0 {
                    let l = (pp + LOG_EPS).ln();
                    hxy1 -= self.p(i, j) * l;
                    hxy2 -= pp * l;
                }
            }
        }
        (hxy, hx, hy, hxy1, hxy2)
    }

    /// f12, first information measure of correlation.
    pub fn info_correlation_1(&self) -> Result<f64, MetricError> {
        let (hxy, hx, hy, hxy1, _) = self.info_terms();
        let denom = hx.max(hy);
        if denom <= 1e-10 {
            return Err(MetricError::UndefinedMetric(
                "information measure of correlation with zero marginal entropy".into(),
            ));
        }
        Ok((hxy - hxy1) / denom)
    }

    /// f13, second information measure of correlation.
    pub fn info_correlation_2(&self) -> f64 {
        let (hxy, _, _, _, hxy2) = self.info_terms();
        (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt()
    }
}

/// Haralick features f1-f13.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HaralickFeatures {
    pub energy: f64,
    pub contrast: f64,
    pub correlation: f64,
    pub sum_of_squares: f64,
    pub homogeneity: f64,
    pub sum_average: f64,
    pub sum_variance: f64,
    pub sum_entropy: f64,
    pub entropy: f64,
    pub difference_variance: f64,
    pub difference_entropy: f64,
    pub info_correlation_1: f64,
    pub info_correlation_2: f64,
}

impl HaralickFeatures {
    pub fn named(&self) -> [(&'static str, f64); 13] {
        [
            ("haralick_energy", self.energy),
            ("haralick_contrast", self.contrast),
            ("haralick_correlation", self.correlation),
            ("haralick_sum_of_squares", self.sum_of_squares),
            ("haralick_homogeneity", self.homogeneity),
            ("haralick_sum_average", self.sum_average),
            ("haralick_sum_variance", self.sum_variance),
            ("haralick_sum_entropy", self.sum_entropy),
            ("haralick_entropy", self.entropy),
            ("haralick_difference_variance", self.difference_variance),
            ("haralick_difference_entropy", self.difference_entropy),
            ("haralick_info_correlation_1", self.info_correlation_1),
            ("haralick_info_correlation_2", self.info_correlation_2),
        ]
    }
}

/// All thirteen features; fails when correlation or f12 is undefined.
pub fn haralick(g: &Glcm) -> Result<HaralickFeatures, MetricError> {
    Ok(HaralickFeatures {
        energy: g.energy(),
        contrast: g.contrast(),
        correlation: g.correlation()?,
        sum_of_squares: g.sum_of_squares(),
        homogeneity: g.homogeneity(),
        sum_average: g.sum_average(),
        sum_variance: g.sum_variance(),
        sum_entropy: g.sum_entropy(),
        entropy: g.entropy(),
        difference_variance: g.difference_variance(),
        difference_entropy: g.difference_entropy(),
        info_correlation_1: g.info_correlation_1()?,
        info_correlation_2: g.info_correlation_2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rng;

    #[test]
    fn constant_image() {
        let g = glcm(&GrayImage::filled(6, 6, 77), 64, 1).unwrap();
        let idx = 77 * 64 / 256;
        assert_eq!(g.p(idx, idx), 1.0);
        assert_eq!(g.energy(), 1.0);
        assert!(g.entropy().abs() < 1e-11);
        assert_eq!(g.contrast(), 0.0);
        assert_eq!(g.homogeneity(), 1.0);
        assert!(matches!(haralick(&g), Err(MetricError::UndefinedMetric(_))));
    }

    #[test]
    fn checkerboard_horizontal() {
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        let g = glcm_with_offsets(&img, 2, &[(1, 0)]).unwrap();
        assert_eq!(g.matrix(), &[0.0, 0.5, 0.5, 0.0]);
        assert_eq!(g.energy(), 0.5);
        assert_eq!(g.contrast(), 1.0);
    }

    #[test]
    fn symmetric_and_normalized() {
        let mut rng = Rng::new(21);
        let img = GrayImage::from_fn(19, 23, |_, _| rng.below(256) as u8);
        for (levels, d) in [(16, 1), (32, 2), (64, 1), (256, 3)] {
            let g = glcm(&img, levels, d).unwrap();
            assert!((g.matrix().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..levels {
                for j in 0..levels {
                    assert_eq!(g.p(i, j), g.p(j, i));
                }
            }
        }
    }

    #[test]
    fn features_on_textured_image_are_finite() {
        let mut rng = Rng::new(5);
        let img = GrayImage::from_fn(32, 32, |x, y| {
            ((x * 7 + y * 3) % 200) as u8 + rng.below(40) as u8
        });
        let f = haralick(&glcm(&img, 64, 1).unwrap()).unwrap();
        assert!(f.named().iter().all(|(_, v)| v.is_finite()));
        assert!(f.correlation > -1.0 - 1e-12 && f.correlation < 1.0 + 1e-12);
        assert!(f.info_correlation_1 <= 1e-12);
        assert!((0.0..=1.0).contains(&f.info_correlation_2));
    }

    #[test]
    fn rejects_bad_parameters() {
        let img = GrayImage::filled(4, 4, 0);
        assert!(glcm(&img, 48, 1).is_err());
        assert!(glcm(&img, 64, 0).is_err());
        assert!(glcm(&GrayImage::filled(2, 2, 0), 64, 2).is_err());
        // a single row still has horizontal pairs
        assert!(glcm(&GrayImage::filled(3, 1, 0), 16, 1).is_ok());
    }
}

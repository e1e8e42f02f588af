use super::MetricError;
use crate::image::GrayImage;

/// First-order statistics of the intensity distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatFeatures {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub skewness: f64,
    /// Excess kurtosis; zero for a normal distribution.
    pub kurtosis: f64,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
}

impl StatFeatures {
    pub fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("mean", self.mean),
            ("median", self.median),
            ("std", self.std),
            ("skewness", self.skewness),
            ("kurtosis", self.kurtosis),
            ("quantile_05", self.q05),
            ("quantile_25", self.q25),
            ("quantile_75", self.q75),
            ("quantile_95", self.q95),
        ]
    }
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median of unsorted data, averaging the two middle values for even counts.
/// Panics on empty input.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Moments are population moments; quantiles interpolate order statistics.
pub fn stat_features(img: &GrayImage) -> Result<StatFeatures, MetricError> {
    let n = img.data().len();
    if n < 4 {
        return Err(MetricError::InvalidInput(format!(
            "need at least 4 pixels, got {n}"
        )));
    }
    let mut v: Vec<f64> = img.data().iter().map(|&l| f64::from(l)).collect();
    v.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mean = v.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in &v {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 == 0.0 {
        return Err(MetricError::UndefinedMetric(
            "skewness and kurtosis of a constant image".into(),
        ));
    }
    Ok(StatFeatures {
        mean,
        median: quantile_sorted(&v, 0.5),
        std: m2.sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
        q05: quantile_sorted(&v, 0.05),
        q25: quantile_sorted(&v, 0.25),
        q75: quantile_sorted(&v, 0.75),
        q95: quantile_sorted(&v, 0.95),
    })
}

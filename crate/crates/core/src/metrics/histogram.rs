use super::MetricError;
use crate::image::GrayImage;

const EPS: f64 = 1e-10;

/// 256-bin intensity histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    bins: Vec<f64>,
    normalized: bool,
}

impl Histogram {
    /// Raw per-level counts.
    pub fn from_counts(img: &GrayImage) -> Self {
        let mut bins = vec![0.0; 256];
        for &l in img.data() {
            bins[l as usize] += 1.0;
        }
        Self {
            bins,
            normalized: false,
        }
    }

    /// Wraps an explicit bin vector, marking it normalized when it sums to one.
    pub fn from_bins(bins: Vec<f64>) -> Result<Self, MetricError> {
        if bins.len() != 256 {
            return Err(MetricError::InvalidInput(format!(
                "histogram needs 256 bins, got {}",
                bins.len()
            )));
        }
        if bins.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(MetricError::InvalidInput(
                "bins must be finite and non-negative".into(),
            ));
        }
        let normalized = (bins.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        Ok(Self { bins, normalized })
    }

    pub fn normalize(mut self) -> Self {
        let total: f64 = self.bins.iter().sum();
        if total > 0.0 {
            self.bins.iter_mut().for_each(|b| *b /= total);
            self.normalized = true;
        }
        self
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

/// Normalized histogram of an image.
pub fn histogram(img: &GrayImage) -> Histogram {
    Histogram::from_counts(img).normalize()
}

/// Histogram comparison measures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HistMetric {
    Bhattacharyya,
    Hellinger,
    ChiSquare,
    /// Pearson correlation over bins.
    Correlation,
    Cosine,
    KullbackLeibler,
    Manhattan,
    /// Minkowski distance of the given order.
    Minkowski(f64),
}

impl HistMetric {
    /// The eight measures used for image comparison, Minkowski at order 3.
    pub const ALL: [HistMetric; 8] = [
        HistMetric::Bhattacharyya,
        HistMetric::Hellinger,
        HistMetric::ChiSquare,
        HistMetric::Correlation,
        HistMetric::Cosine,
        HistMetric::KullbackLeibler,
        HistMetric::Manhattan,
        HistMetric::Minkowski(3.0),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HistMetric::Bhattacharyya => "bhattacharyya",
            HistMetric::Hellinger => "hellinger",
            HistMetric::ChiSquare => "chi_square",
            HistMetric::Correlation => "correlation",
            HistMetric::Cosine => "cosine",
            HistMetric::KullbackLeibler => "kullback_leibler",
            HistMetric::Manhattan => "manhattan",
            HistMetric::Minkowski(_) => "minkowski",
        }
    }

    /// Value of `d(h, h)`: 1 for the similarity measures, 0 otherwise.
    pub fn identity_value(&self) -> f64 {
        match self {
            HistMetric::Correlation | HistMetric::Cosine => 1.0,
            _ => 0.0,
        }
    }
}

pub fn hist_distance(
    h1: &Histogram,
    h2: &Histogram,
    metric: HistMetric,
) -> Result<f64, MetricError> {
    if !(h1.normalized && h2.normalized) {
        return Err(MetricError::Unnormalized);
    }
    let (p, q) = (h1.bins(), h2.bins());
    let bc = || p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>();
    let v = match metric {
        HistMetric::Bhattacharyya => -(bc() + EPS).ln(),
        // sqrt(1 - BC) for unit-mass inputs, in a form without cancellation
        HistMetric::Hellinger => (0.5
            * p.iter()
                .zip(q)
                .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
                .sum::<f64>())
        .sqrt(),
        HistMetric::ChiSquare => p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b) / (a + b + EPS))
            .sum(),
        HistMetric::Correlation => pearson(p, q).ok_or_else(|| {
            MetricError::UndefinedMetric("correlation of a constant histogram".into())
        })?,
        HistMetric::Cosine => {
            let dot: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
            let np = p.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nq = q.iter().map(|b| b * b).sum::<f64>().sqrt();
            (dot / (np * nq)).min(1.0)
        }
        HistMetric::KullbackLeibler => p
            .iter()
            .zip(q)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| a * (a / (b + EPS)).ln())
            .sum::<f64>()
            .max(0.0),
        HistMetric::Manhattan => p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum(),
        HistMetric::Minkowski(order) => {
            if !(order.is_finite() && order >= 1.0) {
                return Err(MetricError::InvalidInput(format!(
                    "Minkowski order must be >= 1, got {order}"
                )));
            }
            p.iter()
                .zip(q)
                .map(|(a, b)| (a - b).abs().powf(order))
                .sum::<f64>()
                .powf(1.0 / order)
        }
    };
    Ok(v)
}

/// Pearson correlation; `None` when either sequence is constant.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Histogram cosine similarity and histogram Pearson correlation of two images.
pub fn image_cosine_and_correlation(
    a: &GrayImage,
    b: &GrayImage,
) -> Result<(f64, f64), MetricError> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(MetricError::SizeMismatch);
    }
    let (ha, hb) = (histogram(a), histogram(b));
    Ok((
        hist_distance(&ha, &hb, HistMetric::Cosine)?,
        hist_distance(&ha, &hb, HistMetric::Correlation)?,
    ))
}

/// Pearson correlation of co-located pixel levels.
pub fn pixel_correlation(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricError> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(MetricError::SizeMismatch);
    }
    let x: Vec<f64> = a.data().iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = b.data().iter().map(|&v| f64::from(v)).collect();
    pearson(&x, &y)
        .ok_or_else(|| MetricError::UndefinedMetric("correlation of a constant image".into()))
}

//! Image comparison battery: first-order statistics, Haralick texture
//! features, histogram distances, SSIM, PSNR and a paired significance test.

mod glcm;
mod histogram;
mod quality;
mod report;
mod stats;
mod wilcoxon;

pub use glcm::{glcm, glcm_with_offsets, haralick, standard_offsets, Glcm, HaralickFeatures};
pub use histogram::{
    hist_distance, histogram, image_cosine_and_correlation, pixel_correlation, HistMetric,
    Histogram,
};
pub use quality::{psnr, ssim};
pub use report::{
    aggregate_report, feature_csv, FeatureComparison, MetricTable, SimilarityReport, SimilarityRow,
    IMAGE_COLUMNS, SPECTRUM_COLUMNS,
};
pub use stats::{median, population_std, quantile_sorted, stat_features, StatFeatures};
pub use wilcoxon::{paired_test, EXACT_MAX_N};

use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("images differ in size")]
    SizeMismatch,
    #[error("histogram is not normalized")]
    Unnormalized,
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Default GLCM quantization.
pub const GLCM_LEVELS: usize = 64;
pub const GLCM_DISTANCE: usize = 1;

/// Ordered named feature values of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<(&'static str, f64)>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
    }
}

/// Statistical features followed by Haralick f1-f13 (64 levels, distance 1).
pub fn feature_vector(img: &GrayImage) -> Result<FeatureVector, MetricError> {
    let st = stat_features(img)?;
    let hf = haralick(&glcm(img, GLCM_LEVELS, GLCM_DISTANCE)?)?;
    let mut entries: Vec<(&'static str, f64)> = st.named().to_vec();
    entries.extend(hf.named());
    Ok(FeatureVector { entries })
}

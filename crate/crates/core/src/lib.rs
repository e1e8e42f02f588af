//! Thermography-to-geometry prediction for injection-moulded parts.
//!
//! The crate covers the whole offline pipeline: image preprocessing
//! ([`preprocess`]), a modal surface descriptor ([`dmd`]), a conditional
//! image-to-image GAN trained from scratch ([`nnet`]), image and spectrum
//! similarity metrics ([`metrics`]) and a synthetic paired dataset ([`synth`]).

pub mod dmd;
pub mod image;
pub mod metrics;
pub mod nnet;
pub mod preprocess;
pub mod synth;

pub use dmd::{build_basis, DmdError, ModalBasis, ModalSpectrum, SpectrumSimilarity};
pub use image::{load_pgm, save_pgm, FloatField, GrayImage, ImageError, Raster, Rng};
pub use metrics::{FeatureVector, MetricError, MetricTable, SimilarityReport};
pub use nnet::{Checkpoint, ModelConfig, NnetError, TrainConfig, TrainingPair};
pub use preprocess::{NormalizationStats, PreprocessError, Shift};
pub use synth::{SynthConfig, SynthError};

//! Small conditional image-to-image GAN trained on the CPU: a UNet generator,
//! a patch discriminator, an adversarial plus L1 objective and Adam.
//!
//! Every layer has a hand-written backward pass. The networks are generic
//! over the element type: `f32` for training and inference, `f64` for
//! finite-difference checks (see [`gradcheck`]).

mod adam;
mod augment;
mod checkpoint;
pub mod gradcheck;
mod layer;
mod loss;
pub mod ops;
mod patchgan;
mod tensor;
mod train;
mod unet;

pub use adam::{adam_update, Adam, AdamConfig};
pub use augment::{augment_pair, augment_with, AugmentConfig, AugmentParams};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use layer::{xavier_init, Layer, LayerGrad, LayerKind, Network, KERNEL};
pub use loss::{bce_with_logits, gan_losses, l1_loss, GanLosses};
pub use patchgan::{PatchGan, PatchGanCache, PatchGanConfig};
pub use tensor::{Scalar, Tensor};
pub use train::{
    curve_csv, image_to_tensor, infer, tensor_to_image, train, Checkpoint, EpochLosses,
    ModelConfig, TrainConfig, TrainOutcome, TrainingPair,
};
pub use unet::{UNet, UNetCache, UNetConfig};

use thiserror::Error;

use crate::image::ImageError;

#[derive(Debug, Error)]
pub enum NnetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),
    #[error("non-finite loss at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NnetError {
    pub(crate) fn in_layer(self, layer: &str) -> Self {
        match self {
            NnetError::Shape(m) => NnetError::Shape(format!("{layer}: {m}")),
            other => other,
        }
    }
}

//! Discrete Modal Decomposition of plane surfaces.
//!
//! Descriptors are the natural vibration modes of the nominal plane. The 2-D
//! basis is built from tensor products of 1-D free-free Euler-Bernoulli beam
//! modes, so the leading descriptors are the rigid-body modes (piston, the
//! two tilts), followed by the twist and the bending modes. Low modes carry
//! global form, high modes waviness and roughness.

mod basis;
mod beam;
mod eigen;
mod io;
mod spectrum;

pub use basis::{build_basis, project, reconstruct, residual_rms, ModalBasis, Surface};
pub use beam::{beam_modes_1d, BeamModes1D};
pub use io::{decode_basis, encode_basis, load_basis, save_basis};
pub use spectrum::{per_mode_error, spectrum_similarity, ModalSpectrum, SpectrumSimilarity};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DmdError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("surface is {found:?} (h, w), basis expects {expected:?}")]
    SizeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("length mismatch: expected {expected} modes, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite reconstruction")]
    NonFinite,
    #[error("undefined similarity: {0}")]
    UndefinedSimilarity(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! The `thermogeo` command line.
//!
//! Every command resolves its options (flag, then config file, then default),
//! writes its artifacts under `--out` and finishes with a `manifest.json`
//! holding the resolved options, the seed and the artifact hashes.

pub mod config;
pub mod manifest;

mod commands;
mod files;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or parameter values.
    #[error("{0}")]
    Usage(String),
    /// Missing, malformed or inconsistent input data, or I/O failure.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub(crate) fn data(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{context}: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "thermogeo",
    version,
    about = "Thermography-to-geometry prediction pipeline"
)]
pub struct Cli {
    /// key = value file with `seed` and `<command>.<option>` entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and save a modal basis.
    Basis(BasisArgs),
    /// Stabilize, normalize, crop, resample and quantize raw fields.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic paired dataset.
    Synth(SynthArgs),
    /// Train the generator and discriminator on image pairs.
    Train(TrainArgs),
    /// Generate geometry images from thermography images.
    Infer(InferArgs),
    /// Compare generated geometry images with real ones.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long)]
    pub w: Option<usize>,
    /// Number of modes [default: 50].
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Directory of `.pgm` or `.csv` fields of one modality.
    #[arg(long)]
    pub input_dir: Option<PathBuf>,
    /// File the others are aligned to [default: first file by name].
    #[arg(long)]
    pub reference: Option<String>,
    /// Align every field to the reference [default: true].
    #[arg(long)]
    pub stabilize: Option<bool>,
    /// Pyramid levels for tracking [default: 3].
    #[arg(long)]
    pub levels: Option<usize>,
    /// Tracking window half-width in pixels [default: 24].
    #[arg(long)]
    pub window: Option<usize>,
    /// Tracking iterations per level [default: 50].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Left edge of the crop [default: centred].
    #[arg(long)]
    pub crop_x: Option<usize>,
    /// Top edge of the crop [default: centred].
    #[arg(long)]
    pub crop_y: Option<usize>,
    /// Side of the square crop [default: 71].
    #[arg(long)]
    pub crop_size: Option<usize>,
    /// Side of the output images [default: 128].
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Image side [default: 32].
    #[arg(long)]
    pub size: Option<usize>,
    /// Modes in the saved basis [default: 50].
    #[arg(long)]
    pub k: Option<usize>,
    /// Modes carrying deformation [default: 12].
    #[arg(long)]
    pub k_active: Option<usize>,
    /// RMS height per mode in µm [default: 20].
    #[arg(long)]
    pub coeff_range: Option<f64>,
    /// Thermography blur in pixels [default: 1].
    #[arg(long)]
    pub blur_sigma: Option<f64>,
    /// Thermography noise in levels [default: 2].
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// `quadratic` or `identity` [default: quadratic].
    #[arg(long)]
    pub thermal_map: Option<String>,
    /// Training pairs [default: 23].
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Validation pairs [default: 14].
    #[arg(long)]
    pub n_val: Option<usize>,
    /// Process settings; the last is validation-only [default: 12].
    #[arg(long)]
    pub n_settings: Option<usize>,
    /// Per-part spread around its setting [default: 0.25].
    #[arg(long)]
    pub setting_spread: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of `pair_<id>_thermo.pgm` / `pair_<id>_geom.pgm` files.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// [default: 200]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 0.0002]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    pub beta1: Option<f64>,
    /// [default: 0.999]
    #[arg(long)]
    pub beta2: Option<f64>,
    /// [default: 1e-8]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Weight of the L1 term [default: 100].
    #[arg(long)]
    pub lambda_l1: Option<f64>,
    /// Generator channels after the first layer [default: 8].
    #[arg(long)]
    pub base_channels: Option<usize>,
    /// Stride-2 discriminator layers [default: 3].
    #[arg(long)]
    pub disc_layers: Option<usize>,
    /// Discriminator channels after the first layer [default: 8].
    #[arg(long)]
    pub disc_base_channels: Option<usize>,
    /// Upscale factor before random cropping [default: 1.125].
    #[arg(long)]
    pub jitter_scale: Option<f64>,
    /// Probability of a horizontal flip [default: 0.5].
    #[arg(long)]
    pub mirror_prob: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory holding `*_thermo.pgm` inputs.
    #[arg(long)]
    pub input_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub real_dir: Option<PathBuf>,
    #[arg(long)]
    pub gen_dir: Option<PathBuf>,
    /// Basis file whose grid matches the images.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// File-name suffix selecting the compared images [default: _geom.pgm].
    #[arg(long)]
    pub suffix: Option<String>,
    /// `settings.csv` from `synth`; adds the held-out setting report.
    #[arg(long)]
    pub settings: Option<PathBuf>,
}

/// Shared state handed to each command.
pub(crate) struct Context {
    pub file: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
}

/// Runs `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => file
            .get("seed")
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|e| CliError::Usage(format!("config key seed: {e}")))
            })
            .transpose()?
            .unwrap_or(0),
    };
    let ctx = Context {
        file,
        seed,
        out: cli.out,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Basis(a) => commands::basis::run(&ctx, a),
        Command::Preprocess(a) => commands::preprocess::run(&ctx, a),
        Command::Synth(a) => commands::synth::run(&ctx, a),
        Command::Train(a) => commands::train::run(&ctx, a),
        Command::Infer(a) => commands::infer::run(&ctx, a),
        Command::Evaluate(a) => commands::evaluate::run(&ctx, a),
    }
}

use std::path::Path;

use thermogeo_core::nnet::{
    curve_csv, encode_checkpoint, train, AdamConfig, AugmentConfig, PatchGanConfig, UNetConfig,
};
use thermogeo_core::{ModelConfig, NnetError, TrainConfig, TrainingPair};

use crate::config::Resolver;
use crate::files::{list_files, load_image};
use crate::manifest::Outputs;
use crate::{CliError, Context, TrainArgs};

pub const CHECKPOINT_FILE: &str = "checkpoint.p2pw";
pub const CURVE_FILE: &str = "loss_curve.csv";

pub const THERMO_SUFFIX: &str = "_thermo.pgm";
pub const GEOM_SUFFIX: &str = "_geom.pgm";

/// Loads every `<name>_thermo.pgm` / `<name>_geom.pgm` pair in `dir`.
pub fn load_pairs(dir: &Path) -> Result<Vec<TrainingPair>, CliError> {
    let thermo = list_files(dir, THERMO_SUFFIX)?;
    let geom = list_files(dir, GEOM_SUFFIX)?;
    let stems = |names: &[String], suffix: &str| -> Vec<String> {
        names
            .iter()
            .map(|n| n.strip_suffix(suffix).unwrap().to_string())
            .collect()
    };
    let (ts, gs) = (stems(&thermo, THERMO_SUFFIX), stems(&geom, GEOM_SUFFIX));
    let mut unmatched: Vec<&String> = thermo
        .iter()
        .zip(&ts)
        .filter(|(_, s)| !gs.contains(s))
        .map(|(n, _)| n)
        .collect();
    unmatched.extend(
        geom.iter()
            .zip(&gs)
            .filter(|(_, s)| !ts.contains(s))
            .map(|(n, _)| n),
    );
    if !unmatched.is_empty() {
        let list: Vec<&str> = unmatched.iter().map(|s| s.as_str()).collect();
        return Err(CliError::Data(format!(
            "{}: files without a partner: {}",
            dir.display(),
            list.join(", ")
        )));
    }
    if ts.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no *{THERMO_SUFFIX} / *{GEOM_SUFFIX} pairs",
            dir.display()
        )));
    }
    ts.iter()
        .map(|s| {
            Ok(TrainingPair {
                input: load_image(&dir.join(format!("{s}{THERMO_SUFFIX}")))?,
                target: load_image(&dir.join(format!("{s}{GEOM_SUFFIX}")))?,
            })
        })
        .collect()
}

fn config_error(e: NnetError) -> CliError {
    match e {
        NnetError::Config(m) => CliError::Usage(m),
        e => CliError::data("train", e),
    }
}

pub fn run(ctx: &Context, a: &TrainArgs) -> Result<(), CliError> {
    let d = TrainConfig::default();
    let mut r = Resolver::new(&ctx.file, "train");
    let data_dir = r.path("data_dir", a.data_dir.clone())?;
    let cfg = TrainConfig {
        epochs: r.value("epochs", a.epochs, d.epochs)?,
        adam: AdamConfig {
            lr: r.value("lr", a.lr, d.adam.lr)?,
            beta1: r.value("beta1", a.beta1, d.adam.beta1)?,
            beta2: r.value("beta2", a.beta2, d.adam.beta2)?,
            eps: r.value("eps", a.eps, d.adam.eps)?,
        },
        lambda_l1: r.value("lambda_l1", a.lambda_l1, d.lambda_l1)?,
        seed: ctx.seed,
        augment: AugmentConfig {
            jitter_scale: r.value("jitter_scale", a.jitter_scale, d.augment.jitter_scale)?,
            mirror_prob: r.value("mirror_prob", a.mirror_prob, d.augment.mirror_prob)?,
        },
    };
    let disc = PatchGanConfig::default();
    let base = r.value("base_channels", a.base_channels, 8)?;
    let disc_layers = r.value("disc_layers", a.disc_layers, disc.num_down_layers)?;
    let disc_base = r.value(
        "disc_base_channels",
        a.disc_base_channels,
        disc.base_channels,
    )?;
    cfg.validate().map_err(config_error)?;

    let pairs = load_pairs(&data_dir)?;
    let size = pairs[0].input.width();
    if pairs[0].input.height() != size {
        return Err(CliError::Data(format!(
            "images must be square, got {size}x{}",
            pairs[0].input.height()
        )));
    }
    let model = ModelConfig {
        generator: UNetConfig::new(size, base).map_err(config_error)?,
        discriminator: PatchGanConfig {
            num_down_layers: disc_layers,
            base_channels: disc_base,
        },
    };
    model.validate().map_err(config_error)?;

    let outcome = train(&pairs, model, &cfg, |e| {
        if ctx.quiet {
            return;
        }
        eprintln!(
            "epoch {:>4}/{}  loss_d {:.4}  loss_g_adv {:.4}  l1 {:.4}",
            e.epoch, cfg.epochs, e.loss_d, e.loss_g_adv, e.loss_g_l1
        );
    })
    .map_err(|e| CliError::data("train", e))?;

    let mut out = Outputs::create(&ctx.out)?;
    out.write(CHECKPOINT_FILE, &encode_checkpoint(&outcome.checkpoint))?;
    out.write(CURVE_FILE, curve_csv(&outcome.curve).as_bytes())?;
    out.finish("train", ctx.seed, r.into_resolved())?;
    Ok(())
}

use thermogeo_core::build_basis;
use thermogeo_core::dmd::encode_basis;

use crate::config::Resolver;
use crate::manifest::Outputs;
use crate::{BasisArgs, CliError, Context};

pub const BASIS_FILE: &str = "basis.dmdb";

/// Smallest grid side the beam discretization supports.
pub const MIN_SIDE: usize = 8;

/// Checks `h x w` with `k` modes, as a usage error.
pub fn check_dims(h: usize, w: usize, k: usize) -> Result<(), CliError> {
    if h < MIN_SIDE || w < MIN_SIDE {
        return Err(CliError::Usage(format!(
            "grid {h}x{w} is too small (each side needs at least {MIN_SIDE} points)"
        )));
    }
    if k == 0 || k > h * w {
        return Err(CliError::Usage(format!(
            "k must lie in [1, h*w = {}], got {k}",
            h * w
        )));
    }
    Ok(())
}

pub fn run(ctx: &Context, a: &BasisArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(&ctx.file, "basis");
    let h = r
        .optional("h", a.h)?
        .ok_or_else(|| CliError::Usage("missing --h".into()))?;
    let w = r
        .optional("w", a.w)?
        .ok_or_else(|| CliError::Usage("missing --w".into()))?;
    let k = r.value("k", a.k, 50)?;
    check_dims(h, w, k)?;

    let basis = build_basis(h, w, k).map_err(|e| CliError::data("basis", e))?;
    let mut out = Outputs::create(&ctx.out)?;
    out.write(BASIS_FILE, &encode_basis(&basis))?;
    out.finish("basis", ctx.seed, r.into_resolved())?;
    Ok(())
}

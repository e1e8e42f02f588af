use thermogeo_core::nnet::{infer, load_checkpoint};

use super::train::{GEOM_SUFFIX, THERMO_SUFFIX};
use crate::config::Resolver;
use crate::files::{list_files, load_image, pgm_bytes};
use crate::manifest::Outputs;
use crate::{CliError, Context, InferArgs};

pub fn run(ctx: &Context, a: &InferArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(&ctx.file, "infer");
    let ck_path = r.path("checkpoint", a.checkpoint.clone())?;
    let input = r.path("input_dir", a.input_dir.clone())?;

    let ck = load_checkpoint(&ck_path).map_err(|e| CliError::data(ck_path.display(), e))?;
    let names = list_files(&input, THERMO_SUFFIX)?;
    if names.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no *{THERMO_SUFFIX} inputs",
            input.display()
        )));
    }
    let mut out = Outputs::create(&ctx.out)?;
    for n in &names {
        let x = load_image(&input.join(n))?;
        let y = infer(&ck, &x).map_err(|e| CliError::data(n, e))?;
        let stem = n.strip_suffix(THERMO_SUFFIX).unwrap();
        out.write(&format!("{stem}{GEOM_SUFFIX}"), &pgm_bytes(&y))?;
    }
    out.finish("infer", ctx.seed, r.into_resolved())?;
    Ok(())
}

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thermogeo_core::preprocess::{
    apply_shift, dataset_stats, lk_shift, quantize, resample_bicubic, Shift,
};
use thermogeo_core::{FloatField, Raster};

use crate::config::Resolver;
use crate::files::{list_files, load_image, parse_grid, pgm_bytes};
use crate::manifest::Outputs;
use crate::{CliError, Context, PreprocessArgs};

fn load_field(path: &Path) -> Result<FloatField, CliError> {
    if path.extension().is_some_and(|e| e == "csv") {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        parse_grid(&text).map_err(|e| CliError::data(path.display(), e))
    } else {
        Ok(load_image(path)?.to_physical())
    }
}

fn stem(name: &str) -> &str {
    name.rsplit_once('.').map_or(name, |(s, _)| s)
}

pub fn run(ctx: &Context, a: &PreprocessArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(&ctx.file, "preprocess");
    let input = r.path("input_dir", a.input_dir.clone())?;
    let reference = r.optional("reference", a.reference.clone())?;
    let stabilize = r.value("stabilize", a.stabilize, true)?;
    let levels = r.value("levels", a.levels, 3)?;
    let window = r.value("window", a.window, 24)?;
    let iters = r.value("iters", a.iters, 50)?;
    let crop_x = r.optional("crop_x", a.crop_x)?;
    let crop_y = r.optional("crop_y", a.crop_y)?;
    let crop = r.value("crop_size", a.crop_size, 71)?;
    let size = r.value("size", a.size, 128)?;
    if crop == 0 || size == 0 {
        return Err(CliError::Usage(
            "crop and output sizes must be positive".into(),
        ));
    }
    if levels == 0 || window < 2 {
        return Err(CliError::Usage(
            "tracking needs at least one level and a window of at least 2".into(),
        ));
    }

    let mut names = list_files(&input, ".pgm")?;
    names.extend(list_files(&input, ".csv")?);
    names.sort();
    if names.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no .pgm or .csv fields",
            input.display()
        )));
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = names.iter().map(|n| stem(n)).find(|s| !seen.insert(*s)) {
        return Err(CliError::Data(format!(
            "{}: both a .pgm and a .csv named {dup}",
            input.display()
        )));
    }
    let fields = names
        .iter()
        .map(|n| load_field(&input.join(n)))
        .collect::<Result<Vec<_>, _>>()?;
    let (w0, h0) = (fields[0].width(), fields[0].height());
    for (n, f) in names.iter().zip(&fields) {
        if (f.width(), f.height()) != (w0, h0) {
            return Err(CliError::Data(format!(
                "{n} is {}x{}, {} is {w0}x{h0}",
                f.width(),
                f.height(),
                names[0]
            )));
        }
    }

    let ref_index = match &reference {
        Some(name) => names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::Data(format!("reference {name} not found in input")))?,
        None => 0,
    };
    let mut shifts = Vec::with_capacity(fields.len());
    let mut stable = Vec::with_capacity(fields.len());
    for (n, f) in names.iter().zip(&fields) {
        let s = if stabilize {
            lk_shift(&fields[ref_index], f, levels, window, iters)
                .map_err(|e| CliError::data(format!("stabilizing {n}"), e))?
        } else {
            Shift::ZERO
        };
        stable.push(apply_shift(f, s));
        shifts.push(s);
    }
    let stats = dataset_stats(&stable).map_err(|e| CliError::data("normalization", e))?;

    if crop > w0 || crop > h0 {
        return Err(CliError::Data(format!(
            "crop {crop}x{crop} does not fit {w0}x{h0} fields"
        )));
    }
    let x0 = crop_x.unwrap_or((w0 - crop) / 2);
    let y0 = crop_y.unwrap_or((h0 - crop) / 2);

    let mut out = Outputs::create(&ctx.out)?;
    let mut shift_csv = String::from("file,dx,dy\n");
    for ((n, f), s) in names.iter().zip(&stable).zip(&shifts) {
        let cropped = f
            .crop(x0, y0, crop, crop)
            .map_err(|e| CliError::data(n, e))?;
        let img = quantize(&resample_bicubic(&cropped, size, size), &stats);
        out.write(&format!("{}.pgm", stem(n)), &pgm_bytes(&img))?;
        writeln!(shift_csv, "{n},{},{}", s.dx, s.dy).unwrap();
    }
    out.write("shifts.csv", shift_csv.as_bytes())?;
    let norm = format!(
        "global_min,global_max,scale\n{},{},{}\n",
        stats.global_min,
        stats.global_max,
        stats.scale()
    );
    out.write("normalization.csv", norm.as_bytes())?;
    out.finish("preprocess", ctx.seed, r.into_resolved())?;
    Ok(())
}

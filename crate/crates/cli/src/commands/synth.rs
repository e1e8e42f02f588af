use thermogeo_core::build_basis;
use thermogeo_core::dmd::encode_basis;
use thermogeo_core::synth::{generate_dataset, geom_name, thermo_name, ThermalMap};
use thermogeo_core::{SynthConfig, SynthError};

use super::basis::{check_dims, BASIS_FILE};
use crate::config::Resolver;
use crate::manifest::Outputs;
use crate::{CliError, Context, SynthArgs};

pub fn run(ctx: &Context, a: &SynthArgs) -> Result<(), CliError> {
    let d = SynthConfig::default();
    let mut r = Resolver::new(&ctx.file, "synth");
    let size = r.value("size", a.size, d.size)?;
    let k = r.value("k", a.k, 50)?;
    let thermal_map = r.value(
        "thermal_map",
        a.thermal_map.clone(),
        d.thermal_map.to_string(),
    )?;
    let cfg = SynthConfig {
        size,
        k_active: r.value("k_active", a.k_active, d.k_active)?,
        coeff_range: r.value("coeff_range", a.coeff_range, d.coeff_range)?,
        thermal_blur_sigma: r.value("blur_sigma", a.blur_sigma, d.thermal_blur_sigma)?,
        noise_std: r.value("noise_std", a.noise_std, d.noise_std)?,
        thermal_map: thermal_map
            .parse::<ThermalMap>()
            .map_err(|e| CliError::Usage(e.to_string()))?,
        n_settings: r.value("n_settings", a.n_settings, d.n_settings)?,
        setting_spread: r.value("setting_spread", a.setting_spread, d.setting_spread)?,
        seed: ctx.seed,
    };
    let n_train = r.value("n_train", a.n_train, 23)?;
    let n_val = r.value("n_val", a.n_val, 14)?;
    check_dims(size, size, k)?;

    let basis = build_basis(size, size, k).map_err(|e| CliError::data("basis", e))?;
    let mut out = Outputs::create(&ctx.out)?;
    let parts =
        generate_dataset(&cfg, &basis, n_train, n_val, out.root()).map_err(|e| match e {
            SynthError::Config(m) => CliError::Usage(m),
            e => CliError::data("synth", e),
        })?;
    for p in &parts {
        let dir = p.split.dir_name();
        out.record(&format!("{dir}/{}", thermo_name(&p.id)))?;
        out.record(&format!("{dir}/{}", geom_name(&p.id)))?;
        out.record(&format!("truth/pair_{}.csv", p.id))?;
    }
    out.record("settings.csv")?;
    out.write(BASIS_FILE, &encode_basis(&basis))?;
    out.finish("synth", ctx.seed, r.into_resolved())?;
    Ok(())
}

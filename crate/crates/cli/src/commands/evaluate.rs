//! Real-vs-generated comparison reports.
//!
//! Written files:
//! - `images_similarity.csv`: histogram cosine and correlation, PSNR, SSIM
//! - `spectrum_similarity.csv`: modal spectrum cosine and R²
//! - `per_mode_error.csv`: `|real_k - generated_k|` for every mode
//! - `features.csv`, `feature_tests.csv`: texture and statistical features
//!   with a paired signed-rank p-value per feature
//! - `baseline.csv`: median spectrum cosine of the matched pairing against a
//!   mismatched one (generated part `i + 1` scored against real part `i`)
//! - `generalization.csv` (with `--settings`): held-out-setting parts apart
//!   from the parts whose setting was seen in training

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thermogeo_core::dmd::{load_basis, per_mode_error, project, spectrum_similarity};
use thermogeo_core::metrics::{
    aggregate_report, feature_csv, feature_vector, image_cosine_and_correlation, median,
    paired_test, psnr, ssim, FeatureComparison, MetricTable, SimilarityRow, IMAGE_COLUMNS,
    SPECTRUM_COLUMNS,
};
use thermogeo_core::{GrayImage, MetricError, ModalSpectrum};

use super::train::GEOM_SUFFIX;
use crate::config::Resolver;
use crate::files::{list_files, load_image};
use crate::manifest::Outputs;
use crate::{CliError, Context, EvaluateArgs};

pub const IMAGES_FILE: &str = "images_similarity.csv";
pub const SPECTRUM_FILE: &str = "spectrum_similarity.csv";
pub const PER_MODE_FILE: &str = "per_mode_error.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const FEATURE_TESTS_FILE: &str = "feature_tests.csv";
pub const BASELINE_FILE: &str = "baseline.csv";
pub const GENERALIZATION_FILE: &str = "generalization.csv";

/// Part identifier of a file: the name without `suffix` and a `pair_` prefix.
pub fn part_of(name: &str, suffix: &str) -> String {
    let stem = name.strip_suffix(suffix).unwrap_or(name);
    stem.strip_prefix("pair_").unwrap_or(stem).to_string()
}

/// Undefined metrics become NaN cells; size mismatches abort.
fn cell(r: Result<f64, MetricError>, part: &str) -> Result<f64, CliError> {
    match r {
        Ok(v) => Ok(v),
        Err(MetricError::SizeMismatch) => Err(CliError::Data(format!(
            "part {part}: real and generated images differ in size"
        ))),
        Err(_) => Ok(f64::NAN),
    }
}

fn spectrum_cells(a: &ModalSpectrum, b: &ModalSpectrum) -> (f64, f64) {
    spectrum_similarity(a, b).map_or((f64::NAN, f64::NAN), |s| (s.cosine, s.r_squared))
}

fn finite_median(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        median(&v)
    }
}

struct Part {
    id: String,
    real: GrayImage,
    generated: GrayImage,
    spec_real: ModalSpectrum,
    spec_gen: ModalSpectrum,
}

/// `part_id -> held_out` from a `settings.csv` written by `synth`.
fn read_settings(path: &Path) -> Result<BTreeMap<String, bool>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("part_id,split,setting,held_out") {
        return Err(CliError::Data(format!(
            "{}: expected header part_id,split,setting,held_out",
            path.display()
        )));
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let held = match f.as_slice() {
            [_, _, _, h] => h.parse::<bool>().ok(),
            _ => None,
        };
        let held = held.ok_or_else(|| {
            CliError::Data(format!("{}: malformed line {}", path.display(), i + 2))
        })?;
        out.insert(f[0].to_string(), held);
    }
    Ok(out)
}

pub fn run(ctx: &Context, a: &EvaluateArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(&ctx.file, "evaluate");
    let real_dir = r.path("real_dir", a.real_dir.clone())?;
    let gen_dir = r.path("gen_dir", a.gen_dir.clone())?;
    let basis_path = r.path("basis", a.basis.clone())?;
    let suffix = r.value("suffix", a.suffix.clone(), GEOM_SUFFIX.to_string())?;
    let settings_path = r.optional_path("settings", a.settings.clone())?;

    let real_names = list_files(&real_dir, &suffix)?;
    let gen_names = list_files(&gen_dir, &suffix)?;
    let mut unmatched: Vec<String> = real_names
        .iter()
        .filter(|n| !gen_names.contains(n))
        .map(|n| format!("{} (real only)", n))
        .collect();
    unmatched.extend(
        gen_names
            .iter()
            .filter(|n| !real_names.contains(n))
            .map(|n| format!("{} (generated only)", n)),
    );
    if !unmatched.is_empty() {
        return Err(CliError::Data(format!(
            "unmatched files: {}",
            unmatched.join(", ")
        )));
    }
    if real_names.is_empty() {
        return Err(CliError::Data(format!(
            "no *{suffix} files in {}",
            real_dir.display()
        )));
    }
    let basis = load_basis(&basis_path).map_err(|e| CliError::data(basis_path.display(), e))?;

    let mut parts = Vec::with_capacity(real_names.len());
    for n in &real_names {
        let real = load_image(&real_dir.join(n))?;
        let generated = load_image(&gen_dir.join(n))?;
        let spec_real = project(&real, &basis).map_err(|e| CliError::data(n, e))?;
        let spec_gen = project(&generated, &basis).map_err(|e| CliError::data(n, e))?;
        parts.push(Part {
            id: part_of(n, &suffix),
            real,
            generated,
            spec_real,
            spec_gen,
        });
    }

    let mut out = Outputs::create(&ctx.out)?;
    let to_data = |e: MetricError| CliError::data("report", e);

    let mut image_rows = Vec::with_capacity(parts.len());
    let mut spectrum_rows = Vec::with_capacity(parts.len());
    let mut per_mode = String::from("part_id,mode_index,abs_error\n");
    for p in &parts {
        let (cosine, correlation) = match image_cosine_and_correlation(&p.real, &p.generated) {
            Ok(v) => v,
            Err(e) => (cell(Err(e), &p.id)?, f64::NAN),
        };
        image_rows.push(SimilarityRow {
            part_id: p.id.clone(),
            cosine,
            correlation,
            psnr_db: cell(psnr(&p.real, &p.generated), &p.id)?,
            ssim: cell(ssim(&p.real, &p.generated), &p.id)?,
        });
        let (c, r2) = spectrum_cells(&p.spec_real, &p.spec_gen);
        spectrum_rows.push((p.id.clone(), vec![c, r2]));
        let err =
            per_mode_error(&p.spec_real, &p.spec_gen).map_err(|e| CliError::data(&p.id, e))?;
        for (k, e) in err.iter().enumerate() {
            writeln!(per_mode, "{},{k},{e}", p.id).unwrap();
        }
    }
    let images = aggregate_report(&image_rows).map_err(to_data)?;
    let spectra = MetricTable::new(&SPECTRUM_COLUMNS, spectrum_rows).map_err(to_data)?;
    out.write(IMAGES_FILE, images.to_csv().as_bytes())?;
    out.write(SPECTRUM_FILE, spectra.to_csv().as_bytes())?;
    out.write(PER_MODE_FILE, per_mode.as_bytes())?;

    // features
    let mut comparisons = Vec::new();
    let mut skipped = String::new();
    let mut per_feature: Vec<(&'static str, Vec<f64>, Vec<f64>)> = Vec::new();
    for p in &parts {
        match (feature_vector(&p.real), feature_vector(&p.generated)) {
            (Ok(fr), Ok(fg)) => {
                for (i, ((name, vr), (_, vg))) in fr.entries.iter().zip(&fg.entries).enumerate() {
                    comparisons.push(FeatureComparison {
                        part_id: p.id.clone(),
                        feature: name.to_string(),
                        real: *vr,
                        generated: *vg,
                    });
                    if per_feature.len() <= i {
                        per_feature.push((name, Vec::new(), Vec::new()));
                    }
                    per_feature[i].1.push(*vr);
                    per_feature[i].2.push(*vg);
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                writeln!(skipped, "# part {} skipped: {e}", p.id).unwrap();
            }
        }
    }
    let mut features = feature_csv(&comparisons);
    features.push_str(&skipped);
    out.write(FEATURES_FILE, features.as_bytes())?;
    let mut tests = String::from("feature_name,parts,p_value\n");
    for (name, real, generated) in &per_feature {
        match paired_test(real, generated) {
            Ok(p) => writeln!(tests, "{name},{},{p}", real.len()).unwrap(),
            Err(e) => writeln!(tests, "# {name}: {e}").unwrap(),
        }
    }
    out.write(FEATURE_TESTS_FILE, tests.as_bytes())?;

    // matched vs mismatched pairing
    let matched = finite_median(spectra.rows.iter().map(|(_, v)| v[0]));
    let mut baseline = String::from("pairing,parts,median_spectrum_cosine\n");
    writeln!(baseline, "matched,{},{matched}", parts.len()).unwrap();
    let mut shuffled = None;
    if parts.len() >= 2 {
        let n = parts.len();
        let s = finite_median(
            (0..n).map(|i| spectrum_cells(&parts[i].spec_real, &parts[(i + 1) % n].spec_gen).0),
        );
        writeln!(baseline, "shuffled,{n},{s}").unwrap();
        shuffled = Some(s);
    } else {
        baseline.push_str("# shuffled pairing needs at least two parts\n");
    }
    out.write(BASELINE_FILE, baseline.as_bytes())?;

    if let Some(path) = &settings_path {
        let settings = read_settings(path)?;
        let missing: Vec<&str> = parts
            .iter()
            .filter(|p| !settings.contains_key(&p.id))
            .map(|p| p.id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Data(format!(
                "{}: no setting for parts {}",
                path.display(),
                missing.join(", ")
            )));
        }
        let mut g = String::from("row,parts");
        for c in IMAGE_COLUMNS {
            write!(g, ",{c}").unwrap();
        }
        g.push_str(",spectrum_cosine,spectrum_r_squared\n");
        let values = |i: usize| -> Vec<f64> {
            let mut v = images.rows[i].1.clone();
            v.extend(&spectra.rows[i].1);
            v
        };
        let held: Vec<usize> = (0..parts.len())
            .filter(|&i| settings[&parts[i].id])
            .collect();
        let seen: Vec<usize> = (0..parts.len())
            .filter(|&i| !settings[&parts[i].id])
            .collect();
        for &i in &held {
            write!(g, "{},1", parts[i].id).unwrap();
            for v in values(i) {
                write!(g, ",{v}").unwrap();
            }
            g.push('\n');
        }
        for (label, group) in [("MEDIAN held-out", &held), ("MEDIAN seen", &seen)] {
            write!(g, "{label},{}", group.len()).unwrap();
            for c in 0..IMAGE_COLUMNS.len() + SPECTRUM_COLUMNS.len() {
                write!(g, ",{}", finite_median(group.iter().map(|&i| values(i)[c]))).unwrap();
            }
            g.push('\n');
        }
        out.write(GENERALIZATION_FILE, g.as_bytes())?;
    }

    if !ctx.quiet {
        println!("median spectrum cosine, matched pairing: {matched}");
        if let Some(s) = shuffled {
            println!("median spectrum cosine, shuffled pairing: {s}");
        }
    }
    out.finish("evaluate", ctx.seed, r.into_resolved())?;
    Ok(())
}

//! Synthetic thermography/geometry pairs with a known modal ground truth.
//!
//! A geometry surface is a random combination of the first `k_active` modal
//! basis vectors. Its thermography image is a fixed monotone function of the
//! height, blurred and corrupted with noise. Both are stored as 8-bit images:
//! geometry at 1.57 µm per level with level 128 at zero height, thermography
//! at 0.902 °C per level.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::dmd::{reconstruct, DmdError, ModalBasis, ModalSpectrum};
use crate::image::{save_pgm, to_level, FloatField, GrayImage, ImageError, Rng};

pub const GEOMETRY_SCALE: f64 = 1.57;
pub const GEOMETRY_ZERO_LEVEL: f64 = 128.0;
pub const THERMAL_SCALE: f64 = 0.902;
pub const THERMAL_OFFSET: f64 = 20.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis parameter: {0}")]
    Config(String),
    #[error(transparent)]
    Dmd(#[from] DmdError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Height-to-temperature relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThermalMap {
    /// `v + 0.3 v^2` on the normalized height `v` in `[-1, 1]`.
    Quadratic,
    Identity,
}

impl ThermalMap {
    /// Maps normalized height in `[-1, 1]` to `[0, 1]`.
    pub fn apply(self, v: f64) -> f64 {
        match self {
            ThermalMap::Quadratic => (v + 0.3 * v * v + 0.7) / 2.0,
            ThermalMap::Identity => (v + 1.0) / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ThermalMap::Quadratic => "quadratic",
            ThermalMap::Identity => "identity",
        }
    }
}

impl fmt::Display for ThermalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThermalMap {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quadratic" => Ok(ThermalMap::Quadratic),
            "identity" => Ok(ThermalMap::Identity),
            _ => Err(SynthError::Config(format!(
                "unknown thermal map {s:?} (expected quadratic or identity)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Image side in pixels.
    pub size: usize,
    /// Number of leading modes that carry deformation.
    pub k_active: usize,
    /// RMS height in µm contributed by one mode at full amplitude.
    pub coeff_range: f64,
    /// Gaussian blur of the thermography, in pixels; 0 disables it.
    pub thermal_blur_sigma: f64,
    /// Additive thermography noise, in levels.
    pub noise_std: f64,
    pub thermal_map: ThermalMap,
    /// Number of process settings; the last one only appears in validation.
    pub n_settings: usize,
    /// Per-part deviation from its setting, relative to `coeff_range`.
    pub setting_spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            size: 32,
            k_active: 12,
            coeff_range: 20.0,
            thermal_blur_sigma: 1.0,
            noise_std: 2.0,
            thermal_map: ThermalMap::Quadratic,
            n_settings: 12,
            setting_spread: 0.25,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self, basis: &ModalBasis) -> Result<(), SynthError> {
        if (basis.height(), basis.width()) != (self.size, self.size) {
            return Err(SynthError::Config(format!(
                "basis grid {}x{} differs from image size {}",
                basis.height(),
                basis.width(),
                self.size
            )));
        }
        if self.k_active == 0 || self.k_active > basis.len() {
            return Err(SynthError::Config(format!(
                "k_active must lie in [1, {}], got {}",
                basis.len(),
                self.k_active
            )));
        }
        let finite_non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.coeff_range.is_finite() && self.coeff_range > 0.0) {
            return Err(SynthError::Config(format!(
                "coeff_range must be positive, got {}",
                self.coeff_range
            )));
        }
        for (name, v) in [
            ("thermal_blur_sigma", self.thermal_blur_sigma),
            ("noise_std", self.noise_std),
            ("setting_spread", self.setting_spread),
        ] {
            if !finite_non_negative(v) {
                return Err(SynthError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.n_settings < 2 {
            return Err(SynthError::Config("need at least 2 settings".into()));
        }
        Ok(())
    }

    /// Largest representable height magnitude in µm.
    pub fn height_limit(&self) -> f64 {
        (255.0 - GEOMETRY_ZERO_LEVEL) * GEOMETRY_SCALE
    }
}

/// One generated example and the spectrum that produced its geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthPair {
    pub thermo: GrayImage,
    pub geom: GrayImage,
    pub truth: ModalSpectrum,
}

/// Random coefficients on the active modes: uniform in `±coeff_range·sqrt(h·w)`.
pub fn draw_coefficients(cfg: &SynthConfig, basis: &ModalBasis, rng: &mut Rng) -> Vec<f64> {
    let amp = cfg.coeff_range * ((basis.height() * basis.width()) as f64).sqrt();
    let mut c = vec![0.0; basis.len()];
    for v in c.iter_mut().take(cfg.k_active) {
        *v = rng.uniform(-amp, amp);
    }
    c
}

/// Separable Gaussian blur with edge clamping.
fn gaussian_blur(field: &FloatField, sigma: f64) -> FloatField {
    if sigma == 0.0 {
        return field.clone();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = taps.iter().sum();
    let (w, h) = (field.width(), field.height());
    let pass = |src: &FloatField, horizontal: bool| {
        FloatField::from_fn(w, h, |x, y| {
            taps.iter()
                .zip(-r..=r)
                .map(|(t, d)| {
                    let (sx, sy) = if horizontal {
                        (x as isize + d, y as isize)
                    } else {
                        (x as isize, y as isize + d)
                    };
                    t * src.get_clamped(sx, sy)
                })
                .sum::<f64>()
                / norm
        })
    };
    pass(&pass(field, true), false)
}

/// Renders the pair for given coefficients. Coefficients are scaled down
/// uniformly if the surface would leave the 8-bit height range; the
/// returned truth is the spectrum actually rendered.
pub fn render_pair(
    cfg: &SynthConfig,
    basis: &ModalBasis,
    coeffs: Vec<f64>,
    rng: &mut Rng,
) -> Result<SynthPair, SynthError> {
    cfg.validate(basis)?;
    let limit = cfg.height_limit();
    let mut coeffs = coeffs;
    let surface = reconstruct(&ModalSpectrum::new(coeffs.clone()), basis)?;
    let (lo, hi) = surface.min_max();
    let peak = lo.abs().max(hi.abs());
    let surface = if peak > limit {
        let k = limit / peak;
        coeffs.iter_mut().for_each(|c| *c *= k);
        reconstruct(&ModalSpectrum::new(coeffs.clone()), basis)?
    } else {
        surface
    };

    let s = cfg.size;
    let geom = GrayImage::from_fn(s, s, |x, y| {
        to_level(surface.get(x, y) / GEOMETRY_SCALE + GEOMETRY_ZERO_LEVEL)
    })
    .with_scale(GEOMETRY_SCALE, -GEOMETRY_ZERO_LEVEL * GEOMETRY_SCALE)?;

    let heat = FloatField::from_fn(s, s, |x, y| {
        let v = (surface.get(x, y) / limit).clamp(-1.0, 1.0);
        255.0 * cfg.thermal_map.apply(v)
    });
    let heat = gaussian_blur(&heat, cfg.thermal_blur_sigma);
    let thermo = GrayImage::from_fn(s, s, |x, y| {
        let noise = if cfg.noise_std > 0.0 {
            cfg.noise_std * rng.normal()
        } else {
            0.0
        };
        to_level(heat.get(x, y) + noise)
    })
    .with_scale(THERMAL_SCALE, THERMAL_OFFSET)?;

    Ok(SynthPair {
        thermo,
        geom,
        truth: ModalSpectrum::new(coeffs),
    })
}

/// Draws fresh coefficients and renders one pair.
pub fn generate_pair(
    cfg: &SynthConfig,
    basis: &ModalBasis,
    rng: &mut Rng,
) -> Result<SynthPair, SynthError> {
    cfg.validate(basis)?;
    let c = draw_coefficients(cfg, basis, rng);
    render_pair(cfg, basis, c, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

/// Where one generated pair lives and which setting produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct PartRecord {
    pub id: String,
    pub split: Split,
    pub setting: usize,
    pub held_out: bool,
}

/// Zero-padded part identifier.
pub fn part_id(index: usize) -> String {
    format!("{index:03}")
}

pub fn thermo_name(id: &str) -> String {
    format!("pair_{id}_thermo.pgm")
}

pub fn geom_name(id: &str) -> String {
    format!("pair_{id}_geom.pgm")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Setting of every part: the held-out setting (the last one) goes to the
/// first two validation parts, everything else cycles through the others.
pub fn assign_settings(n_train: usize, n_val: usize, n_settings: usize) -> Vec<PartRecord> {
    let shared = n_settings - 1;
    let held = n_settings - 1;
    let mut parts = Vec::with_capacity(n_train + n_val);
    for i in 0..n_train {
        parts.push(PartRecord {
            id: part_id(i),
            split: Split::Train,
            setting: i % shared,
            held_out: false,
        });
    }
    for j in 0..n_val {
        let setting = if j < 2 { held } else { (j - 2) % shared };
        parts.push(PartRecord {
            id: part_id(n_train + j),
            split: Split::Val,
            setting,
            held_out: setting == held,
        });
    }
    parts
}

/// Writes `train/` and `val/` image pairs, `truth/pair_<id>.csv` spectra and
/// `settings.csv` under `out`. Each setting has its own coefficient vector;
/// parts perturb it by `setting_spread`. Pair `i` uses the `i`-th stream
/// forked from the seed, after the setting vectors.
pub fn generate_dataset(
    cfg: &SynthConfig,
    basis: &ModalBasis,
    n_train: usize,
    n_val: usize,
    out: &Path,
) -> Result<Vec<PartRecord>, SynthError> {
    cfg.validate(basis)?;
    if n_train == 0 || n_val == 0 {
        return Err(SynthError::Config(
            "need at least one training and one validation pair".into(),
        ));
    }
    let mut rng = Rng::new(cfg.seed);
    let settings: Vec<Vec<f64>> = (0..cfg.n_settings)
        .map(|_| draw_coefficients(cfg, basis, &mut rng))
        .collect();
    let amp =
        cfg.coeff_range * ((basis.height() * basis.width()) as f64).sqrt() * cfg.setting_spread;

    for d in ["train", "val", "truth"] {
        let p = out.join(d);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let parts = assign_settings(n_train, n_val, cfg.n_settings);
    let mut table = String::from("part_id,split,setting,held_out\n");
    for part in &parts {
        let mut pr = rng.fork();
        let mut c = settings[part.setting].clone();
        for v in c.iter_mut().take(cfg.k_active) {
            *v += pr.uniform(-amp, amp);
        }
        let pair = render_pair(cfg, basis, c, &mut pr)?;
        let dir = out.join(part.split.dir_name());
        save_pgm(&pair.thermo, dir.join(thermo_name(&part.id)))?;
        save_pgm(&pair.geom, dir.join(geom_name(&part.id)))?;
        let truth = out.join("truth").join(format!("pair_{}.csv", part.id));
        fs::write(&truth, pair.truth.to_csv()).map_err(io_err(&truth))?;
        writeln!(
            table,
            "{},{},{},{}",
            part.id,
            part.split.dir_name(),
            part.setting,
            part.held_out
        )
        .unwrap();
    }
    let p = out.join("settings.csv");
    fs::write(&p, table).map_err(io_err(&p))?;
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::{build_basis, project};
    use crate::metrics::pixel_correlation;

    fn basis() -> ModalBasis {
        build_basis(32, 32, 20).unwrap()
    }

    #[test]
    fn recovers_truth_within_quantization() {
        let b = basis();
        let cfg = SynthConfig::default();
        let mut rng = Rng::new(1);
        let bound = GEOMETRY_SCALE / 2.0 * 32.0;
        for _ in 0..5 {
            let p = generate_pair(&cfg, &b, &mut rng).unwrap();
            let got = project(&p.geom, &b).unwrap();
            for (k, (g, t)) in got.coeffs().iter().zip(p.truth.coeffs()).enumerate() {
                assert!((g - t).abs() <= bound, "mode {k}: {g} vs {t}");
            }
            assert!(p.truth.coeffs()[cfg.k_active..].iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn identity_map_is_monotone_in_height() {
        let b = basis();
        let cfg = SynthConfig {
            thermal_blur_sigma: 0.0,
            noise_std: 0.0,
            thermal_map: ThermalMap::Identity,
            ..SynthConfig::default()
        };
        let p = generate_pair(&cfg, &b, &mut Rng::new(2)).unwrap();
        let mut pairs: Vec<(u8, u8)> = p
            .geom
            .data()
            .iter()
            .copied()
            .zip(p.thermo.data().iter().copied())
            .collect();
        pairs.sort();
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
        let distinct = pairs
            .iter()
            .map(|p| p.0)
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        assert!(distinct > 20);
    }

    #[test]
    fn thermography_tracks_geometry() {
        let b = basis();
        let cfg = SynthConfig::default();
        let mut rng = Rng::new(3);
        for _ in 0..10 {
            let p = generate_pair(&cfg, &b, &mut rng).unwrap();
            let r = pixel_correlation(&p.thermo, &p.geom).unwrap();
            assert!(r > 0.5, "correlation {r}");
        }
    }

    #[test]
    fn deterministic_pairs() {
        let b = basis();
        let cfg = SynthConfig::default();
        assert_eq!(
            generate_pair(&cfg, &b, &mut Rng::new(4)).unwrap(),
            generate_pair(&cfg, &b, &mut Rng::new(4)).unwrap()
        );
    }

    #[test]
    fn metadata() {
        let p = generate_pair(&SynthConfig::default(), &basis(), &mut Rng::new(5)).unwrap();
        assert_eq!(p.geom.scale(), 1.57);
        assert_eq!(p.thermo.scale(), 0.902);
        assert_eq!(
            p.geom.physical(0, 0),
            p.geom.offset() + 1.57 * f64::from(p.geom.get(0, 0))
        );
    }

    #[test]
    fn settings_layout() {
        let parts = assign_settings(23, 14, 12);
        assert_eq!(parts.len(), 37);
        assert_eq!(parts[0].id, "000");
        assert_eq!(parts[22].id, "022");
        assert_eq!(parts[23].id, "023");
        assert_eq!(parts[36].id, "036");
        let held: Vec<&str> = parts
            .iter()
            .filter(|p| p.held_out)
            .map(|p| p.id.as_str())
            .collect();
        assert_eq!(held, vec!["023", "024"]);
        assert!(parts
            .iter()
            .filter(|p| p.split == Split::Train)
            .all(|p| p.setting < 11));
    }

    #[test]
    fn dataset_on_disk() {
        let b = basis();
        let cfg = SynthConfig {
            seed: 9,
            ..SynthConfig::default()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate_dataset(&cfg, &b, 23, 14, d1.path()).unwrap();
        generate_dataset(&cfg, &b, 23, 14, d2.path()).unwrap();
        let count = |d: &Path| fs::read_dir(d).unwrap().count();
        assert_eq!(count(&d1.path().join("train")), 46);
        assert_eq!(count(&d1.path().join("val")), 28);
        assert_eq!(count(&d1.path().join("truth")), 37);
        for sub in ["train", "val", "truth"] {
            for e in fs::read_dir(d1.path().join(sub)).unwrap() {
                let e = e.unwrap();
                let other = d2.path().join(sub).join(e.file_name());
                assert_eq!(fs::read(e.path()).unwrap(), fs::read(other).unwrap());
            }
        }
        let bound = GEOMETRY_SCALE / 2.0 * 32.0;
        for (split, range) in [("train", 0..23), ("val", 23..37)] {
            for i in range {
                let id = part_id(i);
                let g = crate::image::load_pgm(d1.path().join(split).join(geom_name(&id))).unwrap();
                let truth = ModalSpectrum::from_csv(
                    &fs::read_to_string(d1.path().join("truth").join(format!("pair_{id}.csv")))
                        .unwrap(),
                )
                .unwrap();
                let got = project(&g, &b).unwrap();
                for (a, t) in got.coeffs().iter().zip(truth.coeffs()) {
                    assert!((a - t).abs() <= bound);
                }
            }
        }
    }
}

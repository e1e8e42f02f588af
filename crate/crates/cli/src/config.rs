//! `key = value` run configuration merged with command-line flags.
//!
//! Keys are `seed` or `<command>.<option>`, where `<option>` is the long
//! flag name with dashes replaced by underscores. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Every key a config file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "basis.h",
    "basis.w",
    "basis.k",
    "preprocess.input_dir",
    "preprocess.reference",
    "preprocess.stabilize",
    "preprocess.levels",
    "preprocess.window",
    "preprocess.iters",
    "preprocess.crop_x",
    "preprocess.crop_y",
    "preprocess.crop_size",
    "preprocess.size",
    "synth.size",
    "synth.k",
    "synth.k_active",
    "synth.coeff_range",
    "synth.blur_sigma",
    "synth.noise_std",
    "synth.thermal_map",
    "synth.n_train",
    "synth.n_val",
    "synth.n_settings",
    "synth.setting_spread",
    "train.data_dir",
    "train.epochs",
    "train.lr",
    "train.beta1",
    "train.beta2",
    "train.eps",
    "train.lambda_l1",
    "train.base_channels",
    "train.disc_layers",
    "train.disc_base_channels",
    "train.jitter_scale",
    "train.mirror_prob",
    "infer.checkpoint",
    "infer.input_dir",
    "evaluate.real_dir",
    "evaluate.gen_dir",
    "evaluate.basis",
    "evaluate.suffix",
    "evaluate.settings",
];

/// Parsed config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", i + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key {k:?}",
                    i + 1
                )));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Usage(format!(
                    "config line {}: duplicate key {k:?}",
                    i + 1
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves the options of one command, recording every final value.
pub struct Resolver<'a> {
    file: &'a RunConfig,
    section: &'static str,
    resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a RunConfig, section: &'static str) -> Self {
        Self {
            file,
            section,
            resolved: BTreeMap::new(),
        }
    }

    fn key(&self, name: &str) -> String {
        let key = format!("{}.{name}", self.section);
        debug_assert!(
            KNOWN_KEYS.contains(&key.as_str()),
            "{key} missing from KNOWN_KEYS"
        );
        key
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.file
            .get(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    /// Flag, else file value, else `default`.
    pub fn value<T: FromStr + Display>(
        &mut self,
        name: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let key = self.key(name);
        let v = match flag {
            Some(v) => v,
            None => self.from_file(&key)?.unwrap_or(default),
        };
        self.resolved.insert(key, v.to_string());
        Ok(v)
    }

    /// Like [`Resolver::value`] without a default; absent values stay unrecorded.
    pub fn optional<T: FromStr + Display>(
        &mut self,
        name: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let key = self.key(name);
        let v = match flag {
            Some(v) => Some(v),
            None => self.from_file(&key)?,
        };
        if let Some(v) = &v {
            self.resolved.insert(key, v.to_string());
        }
        Ok(v)
    }

    pub fn path(&mut self, name: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.optional_path(name, flag)?.ok_or_else(|| {
            CliError::Usage(format!(
                "missing --{} (or {}.{name} in the config file)",
                name.replace('_', "-"),
                self.section
            ))
        })
    }

    pub fn optional_path(
        &mut self,
        name: &str,
        flag: Option<PathBuf>,
    ) -> Result<Option<PathBuf>, CliError> {
        let key = self.key(name);
        let v = flag.or_else(|| self.file.get(&key).map(PathBuf::from));
        if let Some(p) = &v {
            self.resolved.insert(key, p.display().to_string());
        }
        Ok(v)
    }

    pub fn into_resolved(self) -> BTreeMap<String, String> {
        self.resolved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let c = RunConfig::parse("# run\n\n train.epochs = 12 \nseed=3\n").unwrap();
        assert_eq!(c.get("train.epochs"), Some("12"));
        assert_eq!(c.get("seed"), Some("3"));
        assert_eq!(c.get("train.lr"), None);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(matches!(
            RunConfig::parse("train.epoch = 3"),
            Err(CliError::Usage(m)) if m.contains("unknown key")
        ));
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("seed").is_err());
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let c = RunConfig::parse("basis.h = 16\nbasis.w = 20").unwrap();
        let mut r = Resolver::new(&c, "basis");
        assert_eq!(r.value("h", Some(32usize), 8).unwrap(), 32);
        assert_eq!(r.value("w", None, 8usize).unwrap(), 20);
        assert_eq!(r.value("k", None, 50usize).unwrap(), 50);
        let resolved = r.into_resolved();
        assert_eq!(resolved["basis.h"], "32");
        assert_eq!(resolved["basis.w"], "20");
        assert_eq!(resolved["basis.k"], "50");
    }

    #[test]
    fn bad_file_value_is_usage_error() {
        let c = RunConfig::parse("basis.k = many").unwrap();
        let mut r = Resolver::new(&c, "basis");
        assert!(matches!(
            r.value("k", None, 1usize),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn missing_required_path() {
        let c = RunConfig::default();
        let mut r = Resolver::new(&c, "infer");
        let err = r.path("input_dir", None).unwrap_err();
        assert!(err.to_string().contains("--input-dir"));
    }
}

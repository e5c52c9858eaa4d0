//! Flat `key = value` run configuration with environment overrides.
//!
//! ```text
//! # comments start with '#' or ';'
//! tol_verify = 1e-9
//! multipliers = one, identity, exp_neg:1, indicator:1.5:2.5
//! [omega]
//! mode = geometric
//! ratio = 0.5
//! ```
//!
//! A `[section]` header prefixes the following keys with `section.`. Every
//! key can be overridden by `EIGEXPAND_<KEY>` with dots mapped to
//! underscores, e.g. `EIGEXPAND_OMEGA_RATIO`.

use std::collections::BTreeMap;

use crate::calculus::{parse_multipliers, Multiplier};
use crate::error::{Error, Result};
use crate::sierpinski::DEFAULT_LEVEL_CAP;

use super::num;

pub const ENV_PREFIX: &str = "EIGEXPAND_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaMode {
    Geometric,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Relative gap below which eigenvalues share a fiber.
    pub tol_group: f64,
    /// Relative tolerance of the identity checks.
    pub tol_verify: f64,
    /// Agreement between the two eigenfunction residuals.
    pub tol_agree: f64,
    pub tol_reconstruct: f64,
    /// Largest admissible sine of a principal angle between fiber spans.
    pub tol_angle: f64,
    pub tol_gram: f64,
    /// Restriction residual below which an eigenpair persists.
    pub tol_decimate: f64,
    pub tol_match: f64,
    pub tol_fit: f64,
    /// Largest admissible decay ratio of the renormalized increments.
    pub ratio_max: f64,
    pub multipliers: Vec<Multiplier>,
    pub level: usize,
    pub level_cap: usize,
    pub seed: u64,
    pub omega_mode: OmegaMode,
    pub omega_ratio: f64,
    /// Number of random test functions added to the point masses.
    pub random_functions: usize,
    /// Largest number of point masses used as test functions.
    pub max_deltas: usize,
    /// Apply seeded random unitaries to every fiber basis before dumping.
    pub rotate: bool,
    pub fiber_csv: bool,
    pub alphas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol_group: 1e-8,
            tol_verify: 1e-9,
            tol_agree: 1e-12,
            tol_reconstruct: 1e-10,
            tol_angle: 1e-8,
            tol_gram: 1e-10,
            tol_decimate: 1e-8,
            tol_match: 1e-6,
            tol_fit: 1e-6,
            ratio_max: 0.5,
            multipliers: Multiplier::standard_set(),
            level: 2,
            level_cap: DEFAULT_LEVEL_CAP,
            seed: 0,
            omega_mode: OmegaMode::Geometric,
            omega_ratio: 0.5,
            random_functions: 4,
            max_deltas: 16,
            rotate: false,
            fiber_csv: true,
            alphas: vec![0.25, 0.5, 1.0],
        }
    }
}

/// Every recognized key, in echo order.
pub const KEYS: &[&str] = &[
    "alphas",
    "fiber_csv",
    "level",
    "level_cap",
    "max_deltas",
    "multipliers",
    "omega.mode",
    "omega.ratio",
    "random_functions",
    "ratio_max",
    "rotate",
    "seed",
    "tol_agree",
    "tol_angle",
    "tol_decimate",
    "tol_fit",
    "tol_gram",
    "tol_group",
    "tol_match",
    "tol_reconstruct",
    "tol_verify",
];

/// `omega.ratio` becomes `EIGEXPAND_OMEGA_RATIO`.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_ascii_uppercase())
}

fn invalid(key: &str, value: &str, why: &str) -> Error {
    Error::InvalidArgument(format!("config key {key}: {why} (got {value:?})"))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(invalid(key, value, "expected a positive number")),
    }
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(invalid(key, value, "expected a boolean")),
    }
}

fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| invalid(key, value, "expected a nonnegative integer"))
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let err = |message: String| Error::Parse { line: lineno + 1, message };
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim();
            let key = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            config.set(&key, value.trim()).map_err(|e| err(e.to_string()))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies `EIGEXPAND_*` overrides found in `vars`.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let vars: BTreeMap<String, String> =
            vars.into_iter().map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string())).collect();
        for key in KEYS {
            if let Some(value) = vars.get(&env_name(key)) {
                self.set(key, value.trim())
                    .map_err(|e| Error::InvalidArgument(format!("{}: {e}", env_name(key))))?;
            }
        }
        self.validate()
    }

    /// Applies the overrides present in the process environment.
    pub fn apply_process_env(&mut self) -> Result<()> {
        self.apply_env(std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "tol_group" => self.tol_group = positive(key, value)?,
            "tol_verify" => self.tol_verify = positive(key, value)?,
            "tol_agree" => self.tol_agree = positive(key, value)?,
            "tol_reconstruct" => self.tol_reconstruct = positive(key, value)?,
            "tol_angle" => self.tol_angle = positive(key, value)?,
            "tol_gram" => self.tol_gram = positive(key, value)?,
            "tol_decimate" => self.tol_decimate = positive(key, value)?,
            "tol_match" => self.tol_match = positive(key, value)?,
            "tol_fit" => self.tol_fit = positive(key, value)?,
            "ratio_max" => self.ratio_max = positive(key, value)?,
            "multipliers" => self.multipliers = parse_multipliers(value)?,
            "level" => self.level = integer(key, value)?,
            "level_cap" => self.level_cap = integer(key, value)?,
            "seed" => self.seed = integer(key, value)?,
            "random_functions" => self.random_functions = integer(key, value)?,
            "max_deltas" => self.max_deltas = integer(key, value)?,
            "rotate" => self.rotate = boolean(key, value)?,
            "fiber_csv" => self.fiber_csv = boolean(key, value)?,
            "omega.mode" => {
                self.omega_mode = match value {
                    "geometric" => OmegaMode::Geometric,
                    "file" => OmegaMode::File,
                    _ => return Err(invalid(key, value, "expected geometric or file")),
                }
            }
            "omega.ratio" => {
                let r = positive(key, value)?;
                if r > 1.0 {
                    return Err(invalid(key, value, "ratio must lie in (0, 1]"));
                }
                self.omega_ratio = r;
            }
            "alphas" => {
                self.alphas = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| positive(key, s.trim()))
                    .collect::<Result<_>>()?;
            }
            _ => return Err(Error::InvalidArgument(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.level > self.level_cap {
            return Err(Error::LevelOverCap { level: self.level, cap: self.level_cap });
        }
        if self.multipliers.is_empty() {
            return Err(Error::InvalidArgument("multipliers must not be empty".into()));
        }
        Ok(())
    }

    /// Every key with its effective value, for the report metadata.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |v: &[f64]| v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",");
        let multipliers = self.multipliers.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        let mode = match self.omega_mode {
            OmegaMode::Geometric => "geometric",
            OmegaMode::File => "file",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("alphas", join(&self.alphas)),
            ("fiber_csv", self.fiber_csv.to_string()),
            ("level", self.level.to_string()),
            ("level_cap", self.level_cap.to_string()),
            ("max_deltas", self.max_deltas.to_string()),
            ("multipliers", multipliers),
            ("omega.mode", mode.to_string()),
            ("omega.ratio", num(self.omega_ratio)),
            ("random_functions", self.random_functions.to_string()),
            ("ratio_max", num(self.ratio_max)),
            ("rotate", self.rotate.to_string()),
            ("seed", self.seed.to_string()),
            ("tol_agree", num(self.tol_agree)),
            ("tol_angle", num(self.tol_angle)),
            ("tol_decimate", num(self.tol_decimate)),
            ("tol_fit", num(self.tol_fit)),
            ("tol_gram", num(self.tol_gram)),
            ("tol_group", num(self.tol_group)),
            ("tol_match", num(self.tol_match)),
            ("tol_reconstruct", num(self.tol_reconstruct)),
            ("tol_verify", num(self.tol_verify)),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_sections() {
        let c = RunConfig::parse("seed = 7\n[omega]\nratio = 0.25\n; note\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.omega_ratio, 0.25);
        assert_eq!(c.tol_verify, 1e-9);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("tol_verify = 0").is_err());
        assert!(RunConfig::parse("tol_verify = -1").is_err());
        assert!(RunConfig::parse("nonsense = 1").is_err());
        assert!(RunConfig::parse("level = 7").is_err());
        let err = RunConfig::parse("seed = 1\nlevel 3").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn env_overrides() {
        let mut c = RunConfig::default();
        c.apply_env([("EIGEXPAND_TOL_VERIFY", "1e-6"), ("EIGEXPAND_OMEGA_MODE", "file"), ("OTHER", "x")])
            .unwrap();
        assert_eq!(c.tol_verify, 1e-6);
        assert_eq!(c.omega_mode, OmegaMode::File);
        assert!(c.apply_env([("EIGEXPAND_LEVEL", "9")]).is_err());
    }

    #[test]
    fn echo_covers_every_key() {
        let echo = RunConfig::default().echo();
        assert_eq!(echo.keys().map(String::as_str).collect::<Vec<_>>(), KEYS);
        let mut c = RunConfig::default();
        for (k, v) in &echo {
            c.set(k, v).unwrap();
        }
        assert_eq!(c, RunConfig::default());
    }
}

//! Flat `key = value` experiment configuration and model construction.
//!
//! Lines are `key = value` pairs; blank lines and lines starting with `#` are
//! ignored. Keys are consumed as they are read so that leftovers can be
//! rejected as typos once a command has taken everything it understands.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use polar_tails::angular::{AngularModel, DirichletParams};
use polar_tails::polar_exact::PolarModel;
use polar_tails::radial::{KotzParams, RadialModel};

use crate::CliError;

pub struct Config {
    entries: BTreeMap<String, String>,
    path: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    idx + 1
                ))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "{}:{}: empty key",
                    path.display(),
                    idx + 1
                )));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!(
                    "{}:{}: duplicate key `{key}`",
                    path.display(),
                    idx + 1
                )));
            }
        }
        Ok(Config { entries, path: path.to_path_buf() })
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take_parse<T>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                CliError::Config(format!(
                    "{}: key `{key}`: cannot parse `{v}`: {e}",
                    self.path.display()
                ))
            }),
        }
    }

    pub fn require_parse<T>(&mut self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.take_parse(key)?.ok_or_else(|| {
            CliError::Config(format!(
                "{}: missing required key `{key}`",
                self.path.display()
            ))
        })
    }

    pub fn require(&mut self, key: &str) -> Result<String, CliError> {
        self.take(key).ok_or_else(|| {
            CliError::Config(format!(
                "{}: missing required key `{key}`",
                self.path.display()
            ))
        })
    }

    /// Comma-separated float list that must be non-empty and strictly
    /// increasing.
    pub fn require_grid(&mut self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.require(key)?;
        let mut grid = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let v: f64 = part.parse().map_err(|e| {
                CliError::Config(format!(
                    "{}: key `{key}`: cannot parse `{part}`: {e}",
                    self.path.display()
                ))
            })?;
            grid.push(v);
        }
        if grid.is_empty() {
            return Err(CliError::Config(format!(
                "{}: key `{key}` must list at least one value",
                self.path.display()
            )));
        }
        // negated comparison also rejects NaN entries, which parse
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Config(format!(
                "{}: key `{key}` must be strictly increasing",
                self.path.display()
            )));
        }
        Ok(grid)
    }

    /// Rejects keys no command consumed, so typos fail loudly.
    pub fn finish(self) -> Result<(), CliError> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.entries.keys().map(|k| k.as_str()).collect();
        Err(CliError::Config(format!(
            "{}: unknown key(s): {}",
            self.path.display(),
            keys.join(", ")
        )))
    }
}

/// Builds the bivariate model from `radial.*`, `angular.*`, and `rho`.
///
/// Radial families: `chi2` (no parameters) and `kotz` with required
/// `radial.k`, `radial.n`, `radial.r`, `radial.kappa`. Angular families:
/// `uniform`, `dirichlet` with required `angular.a`, `angular.b` and optional
/// `angular.eps` (default pi), and `custom`, a power-profile density
/// `|theta|^(2 delta)` on (-pi, pi) with required `angular.delta`.
/// `rho` defaults to 0.
pub fn build_model(cfg: &mut Config) -> Result<PolarModel<f64>, CliError> {
    let radial = match cfg.require("radial.family")?.as_str() {
        "chi2" => RadialModel::rayleigh(),
        "kotz" => RadialModel::kotz(KotzParams {
            k: cfg.require_parse("radial.k")?,
            n: cfg.require_parse("radial.n")?,
            r: cfg.require_parse("radial.r")?,
            kappa: cfg.require_parse("radial.kappa")?,
        })?,
        other => {
            return Err(CliError::Config(format!(
                "radial.family must be `chi2` or `kotz`, got `{other}`"
            )))
        }
    };
    let angular = match cfg.require("angular.family")?.as_str() {
        "uniform" => AngularModel::uniform(),
        "dirichlet" => AngularModel::dirichlet(DirichletParams {
            a: cfg.require_parse("angular.a")?,
            b: cfg.require_parse("angular.b")?,
            eps: cfg
                .take_parse("angular.eps")?
                .unwrap_or(std::f64::consts::PI),
        })?,
        "custom" => {
            let delta: f64 = cfg.require_parse("angular.delta")?;
            let density = Arc::new(move |theta: f64| theta.abs().powf(2.0 * delta));
            AngularModel::custom(
                density,
                delta,
                std::f64::consts::PI,
                format!("power-profile(delta={delta})"),
            )?
        }
        other => {
            return Err(CliError::Config(format!(
                "angular.family must be `uniform`, `dirichlet`, or `custom`, got `{other}`"
            )))
        }
    };
    let rho = cfg.take_parse("rho")?.unwrap_or(0.0);
    Ok(PolarModel::new(radial, angular, rho)?)
}

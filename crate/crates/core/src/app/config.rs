use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{EpochLayout, PreprocessOptions};
use crate::error::{Error, Result};
use crate::graph::Measure;
use crate::hdp::{FitConfig, GammaPrior, Hyperparams, ScanOrder, Schedule};

pub const CONFIG_VERSION: u32 = 1;

/// Flat run configuration. Relative paths are resolved against the
/// directory of the file the config was loaded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,

    pub archive: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lemma_lexicon: Option<PathBuf>,
    /// Generative spec used instead of an archive.
    pub synthetic_spec: Option<PathBuf>,
    pub language: String,
    pub min_token_len: usize,

    pub energy_fraction: f64,
    pub window_years: i32,
    pub lag_years: i32,
    pub first_start_year: Option<i32>,
    pub last_year: Option<i32>,

    pub gamma: f64,
    pub alpha0: f64,
    pub eta: f64,
    pub gamma_prior_shape: f64,
    pub gamma_prior_rate: f64,
    pub alpha0_prior_shape: f64,
    pub alpha0_prior_rate: f64,
    pub k_init: usize,
    pub min_mass: u64,
    pub burn_in: usize,
    pub sweeps: usize,
    pub resample_every: usize,
    pub aux_iters: usize,
    pub scan_order: ScanOrder,
    pub check_invariants: bool,

    #[serde(with = "measure_name")]
    pub measure: Measure,
    pub threshold: f64,

    pub master_seed: u64,
    pub output_dir: PathBuf,

    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

mod measure_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::graph::Measure;

    pub fn serialize<S: Serializer>(m: &Measure, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&m.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Measure, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let hyper = Hyperparams::default();
        let schedule = Schedule::default();
        let fit = FitConfig::default();
        Self {
            config_version: CONFIG_VERSION,
            archive: None,
            stopwords: None,
            lemma_lexicon: None,
            synthetic_spec: None,
            language: "eng".into(),
            min_token_len: PreprocessOptions::default().min_token_len,
            energy_fraction: 0.9,
            window_years: 5,
            lag_years: 2,
            first_start_year: None,
            last_year: None,
            gamma: hyper.gamma,
            alpha0: hyper.alpha0,
            eta: hyper.eta,
            gamma_prior_shape: hyper.gamma_prior.shape,
            gamma_prior_rate: hyper.gamma_prior.rate,
            alpha0_prior_shape: hyper.alpha0_prior.shape,
            alpha0_prior_rate: hyper.alpha0_prior.rate,
            k_init: fit.k_init,
            min_mass: fit.min_mass,
            burn_in: schedule.burn_in,
            sweeps: schedule.sweeps,
            resample_every: schedule.resample_every,
            aux_iters: fit.aux_iters,
            scan_order: fit.scan,
            check_invariants: fit.check_invariants,
            measure: Measure::Jaccard,
            threshold: 0.1,
            master_seed: 0,
            output_dir: PathBuf::from("run"),
            base_dir: None,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn at_least_one(field: &str, v: usize) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(Error::config(field, "must be >= 1"))
    }
}

impl RunConfig {
    /// Parse without validating.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "config".into());
            Error::config(&field, e.message().to_string())
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config = Self::parse(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parse a config file and anchor its relative paths, leaving validation
    /// to the caller so overrides can be applied first.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let config = Self::read(path)?;
        config.validate()?;
        Ok(config)
    }

    /// Resolve a configured path against the config file's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::config(
                "config_version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.config_version),
            ));
        }
        match (&self.archive, &self.synthetic_spec) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "synthetic_spec",
                    "set either archive or synthetic_spec, not both",
                ))
            }
            (None, None) => return Err(Error::config("archive", "one of archive or synthetic_spec is required")),
            _ => {}
        }
        if self.language.trim().is_empty() {
            return Err(Error::config("language", "must not be empty"));
        }
        at_least_one("min_token_len", self.min_token_len)?;
        if !(self.energy_fraction > 0.0 && self.energy_fraction <= 1.0) {
            return Err(Error::config(
                "energy_fraction",
                format!("must be in (0, 1], got {}", self.energy_fraction),
            ));
        }
        if self.window_years < 1 {
            return Err(Error::config("window_years", "must be >= 1"));
        }
        if self.lag_years < 1 || self.lag_years > self.window_years {
            return Err(Error::config(
                "lag_years",
                format!(
                    "must be in [1, window_years={}], got {}",
                    self.window_years, self.lag_years
                ),
            ));
        }
        if let (Some(first), Some(last)) = (self.first_start_year, self.last_year) {
            if last < first {
                return Err(Error::config("last_year", "must not precede first_start_year"));
            }
        }
        positive("gamma", self.gamma)?;
        positive("alpha0", self.alpha0)?;
        positive("eta", self.eta)?;
        positive("gamma_prior_shape", self.gamma_prior_shape)?;
        positive("gamma_prior_rate", self.gamma_prior_rate)?;
        positive("alpha0_prior_shape", self.alpha0_prior_shape)?;
        positive("alpha0_prior_rate", self.alpha0_prior_rate)?;
        at_least_one("k_init", self.k_init)?;
        at_least_one("min_mass", self.min_mass as usize)?;
        at_least_one("burn_in", self.burn_in)?;
        at_least_one("sweeps", self.sweeps)?;
        at_least_one("aux_iters", self.aux_iters)?;
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::config(
                "threshold",
                format!("must be in [0, 1), got {}", self.threshold),
            ));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("output_dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            gamma: self.gamma,
            alpha0: self.alpha0,
            eta: self.eta,
            gamma_prior: GammaPrior {
                shape: self.gamma_prior_shape,
                rate: self.gamma_prior_rate,
            },
            alpha0_prior: GammaPrior {
                shape: self.alpha0_prior_shape,
                rate: self.alpha0_prior_rate,
            },
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            hyper: self.hyperparams(),
            schedule: Schedule {
                burn_in: self.burn_in,
                sweeps: self.sweeps,
                resample_every: self.resample_every,
            },
            k_init: self.k_init,
            min_mass: self.min_mass,
            scan: self.scan_order,
            aux_iters: self.aux_iters,
            check_invariants: self.check_invariants,
        }
    }

    pub fn epoch_layout(&self) -> EpochLayout {
        EpochLayout {
            window_years: self.window_years,
            lag_years: self.lag_years,
            first_start: self.first_start_year,
            last_year: self.last_year,
        }
    }

    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            min_token_len: self.min_token_len,
        }
    }
}

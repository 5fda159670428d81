//! Campaign configuration: TOML file, presets and flag overrides.
//!
//! Precedence, lowest to highest: built-in defaults, the preset or config
//! file, command-line flags.

use std::path::{Path, PathBuf};

use flight_core::flight::StepPolicy;
use flight_core::DomainSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Optional overrides of the default step policy, which depends on `ε` and
/// `R_Ω`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_correction: Option<bool>,
}

impl PolicyOverrides {
    pub fn resolve(&self, epsilon: f64, r_omega: f64) -> StepPolicy {
        let base = StepPolicy::defaults(epsilon, r_omega);
        StepPolicy {
            c_step: self.c_step.unwrap_or(base.c_step),
            dt_max: self.dt_max.unwrap_or(base.dt_max),
            delta_abs: self.delta_abs.unwrap_or(base.delta_abs),
            t_max: self.t_max.unwrap_or(base.t_max),
            bridge_correction: self.bridge_correction.unwrap_or(base.bridge_correction),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Replaces the middle time window `[10ε², R²/10]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<(f64, f64)>,
    /// Replaces the length window `[4ε, R/4]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_window: Option<(f64, f64)>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    /// Defaults to the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_seed: Option<u64>,
}

fn default_resamples() -> usize {
    flight_core::analysis::DEFAULT_RESAMPLES
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { time_window: None, length_window: None, bootstrap_resamples: default_resamples(), bootstrap_seed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub domain: DomainSpec,
    pub epsilon: f64,
    /// Finest Whitney generation; defaults to `⌊log₂ ε⌋ − 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_generation: Option<i32>,
    #[serde(default = "default_flights")]
    pub n_flights: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Boundary dimension the exponents are checked against; defaults to
    /// the domain's known value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_dimension: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub policy: PolicyOverrides,
    #[serde(default)]
    pub fit: FitConfig,
}

fn default_flights() -> u64 {
    10_000
}

fn default_workers() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("flights-out")
}

/// The part of a configuration that determines results. Worker count and
/// output location are left out so outputs do not depend on them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub domain: DomainSpec,
    pub epsilon: f64,
    pub min_generation: i32,
    pub n_flights: u64,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_dimension: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub policy: PolicyOverrides,
    pub fit: FitConfig,
}

/// Flag values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

pub const PRESETS: [&str; 2] = ["square-quick", "koch-full"];

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Unit square at `ε = 2^-8`, 50k flights.
    pub fn square_quick() -> Self {
        Self {
            domain: DomainSpec::Square { side: 1.0, center: Some(vec![0.5, 0.5]) },
            epsilon: 2f64.powi(-8),
            min_generation: Some(-12),
            n_flights: 50_000,
            master_seed: 1,
            workers: default_workers(),
            output_dir: PathBuf::from("square-quick"),
            target_dimension: None,
            tolerance: None,
            policy: PolicyOverrides::default(),
            fit: FitConfig::default(),
        }
    }

    /// Koch snowflake of generation 6 at `ε = 2^-7`, 200k flights.
    pub fn koch_full() -> Self {
        Self {
            domain: DomainSpec::KochSnowflake { generation: 6, side: 1.0, center: None },
            epsilon: 2f64.powi(-7),
            min_generation: Some(-11),
            n_flights: 200_000,
            master_seed: 1,
            workers: default_workers(),
            output_dir: PathBuf::from("koch-full"),
            target_dimension: None,
            tolerance: None,
            policy: PolicyOverrides::default(),
            fit: FitConfig::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            "square-quick" => Ok(Self::square_quick()),
            "koch-full" => Ok(Self::koch_full()),
            _ => Err(CliError::Usage(format!("unknown preset {name:?}; known presets: {}", PRESETS.join(", ")))),
        }
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.master_seed = seed;
        }
        if let Some(workers) = overrides.workers {
            self.workers = workers;
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = dir.clone();
        }
    }

    pub fn min_generation(&self) -> i32 {
        self.min_generation.unwrap_or(self.epsilon.log2().floor() as i32 - 4)
    }

    pub fn bootstrap_seed(&self) -> u64 {
        self.fit.bootstrap_seed.unwrap_or(self.master_seed)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CliError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        let mg = self.min_generation();
        if self.epsilon < 2f64.powi(mg + 3) {
            return Err(CliError::Config(format!(
                "epsilon {} is below 2^(min_generation+3) = {}; lower min_generation",
                self.epsilon,
                2f64.powi(mg + 3)
            )));
        }
        if self.n_flights == 0 {
            return Err(CliError::Config("n_flights must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        for (name, w) in [("fit.time_window", self.fit.time_window), ("fit.length_window", self.fit.length_window)] {
            if let Some((a, b)) = w {
                if !(a > 0.0 && b > a && b.is_finite()) {
                    return Err(CliError::Config(format!("{name} must satisfy 0 < lo < hi, got [{a}, {b}]")));
                }
            }
        }
        Ok(())
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            domain: self.domain.clone(),
            epsilon: self.epsilon,
            min_generation: self.min_generation(),
            n_flights: self.n_flights,
            master_seed: self.master_seed,
            target_dimension: self.target_dimension,
            tolerance: self.tolerance,
            policy: self.policy.clone(),
            fit: self.fit.clone(),
        }
    }

    /// Rebuilds a configuration from an embedded provenance record.
    pub fn from_provenance(p: Provenance, workers: usize, output_dir: PathBuf) -> Self {
        Self {
            domain: p.domain,
            epsilon: p.epsilon,
            min_generation: Some(p.min_generation),
            n_flights: p.n_flights,
            master_seed: p.master_seed,
            workers,
            output_dir,
            target_dimension: p.target_dimension,
            tolerance: p.tolerance,
            policy: p.policy,
            fit: p.fit,
        }
    }
}

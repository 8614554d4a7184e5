//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jump::{JumpLaw, JumpSpec};
use crate::kernel::{KernelSpec, ResponseKernel, Scaling};
use crate::limit::validate_u_grid;

pub const DEFAULT_REPLICATIONS: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Validation { field: &'static str, message: String },
}

fn validation(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field,
        message: message.into(),
    }
}

/// A time given either as a number or as a string such as `"e^7"` or `"1e5"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeLiteral {
    Number(f64),
    Text(String),
}

impl TimeLiteral {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Self::Number(x) => Ok(*x),
            Self::Text(s) => parse_time(s),
        }
    }
}

/// Parses `"e^x"` literals and ordinary (scientific-notation) reals.
pub fn parse_time(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("e^") {
        Some(exponent) => exponent.trim().parse::<f64>().map(f64::exp),
        None => s.parse::<f64>(),
    };
    parsed.map_err(|e| format!("cannot read `{s}` as a time: {e}"))
}

/// Acceptance thresholds for the `verify` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gates {
    pub max_covariance_deviation: f64,
    pub max_abs_skewness: f64,
    pub max_abs_excess_kurtosis: f64,
    pub projection_variance_tolerance: f64,
    /// Standard errors allowed between estimated and exact Poisson covariances.
    pub poisson_se_multiple: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            max_covariance_deviation: 0.3,
            max_abs_skewness: 0.25,
            max_abs_excess_kurtosis: 0.5,
            projection_variance_tolerance: 0.5,
            poisson_se_multiple: 4.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    jump: JumpSpec,
    kernel: KernelSpec,
    #[serde(default)]
    scaling: Scaling,
    t: TimeLiteral,
    u_grid: Vec<f64>,
    #[serde(default)]
    alphas: Option<Vec<f64>>,
    #[serde(default)]
    replications: Option<u64>,
    #[serde(default)]
    master_seed: Option<u64>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    gates: Gates,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub scaling: Option<Scaling>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub jump: JumpLaw,
    pub kernel: ResponseKernel,
    pub scaling: Scaling,
    pub t: f64,
    pub u_grid: Vec<f64>,
    pub alphas: Option<Vec<f64>>,
    pub replications: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub gates: Gates,
}

/// Every setting that influences outputs; hashed for provenance.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub jump: JumpSpec,
    pub kernel: KernelSpec,
    pub scaling: Scaling,
    pub t: f64,
    pub u_grid: Vec<f64>,
    pub alphas: Option<Vec<f64>>,
    pub replications: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub gates: Gates,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            jump: self.jump.spec(),
            kernel: self.kernel.spec(),
            scaling: self.scaling,
            t: self.t,
            u_grid: self.u_grid.clone(),
            alphas: self.alphas.clone(),
            replications: self.replications,
            master_seed: self.master_seed,
            workers: self.workers,
            gates: self.gates,
        }
    }

    /// SHA-256 of the canonical JSON echo, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.echo()).expect("config echo serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses and validates configuration text; `path` is used in messages only.
pub fn parse_config(text: &str, path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let jump = JumpLaw::new(raw.jump).map_err(|e| validation("jump", e.to_string()))?;
    let kernel = ResponseKernel::new(raw.kernel).map_err(|e| validation("kernel", e.to_string()))?;
    let t = raw.t.value().map_err(|e| validation("t", e))?;
    if !(t.is_finite() && t > kernel.t_min()) {
        return Err(validation(
            "t",
            format!("must exceed the kernel cutoff t_min = {}, got {t}", kernel.t_min()),
        ));
    }
    validate_u_grid(&raw.u_grid).map_err(|e| validation("u_grid", e.to_string()))?;
    if let Some(a) = &raw.alphas {
        if a.len() != raw.u_grid.len() {
            return Err(validation(
                "alphas",
                format!("has {} entries but u_grid has {}", a.len(), raw.u_grid.len()),
            ));
        }
    }
    let replications = overrides
        .replications
        .or(raw.replications)
        .unwrap_or(DEFAULT_REPLICATIONS);
    if replications < 1 {
        return Err(validation("replications", "must be at least 1"));
    }
    let workers = overrides.workers.or(raw.workers).unwrap_or_else(default_workers);
    if workers < 1 {
        return Err(validation("workers", "must be at least 1"));
    }
    Ok(ExperimentConfig {
        jump,
        kernel,
        scaling: overrides.scaling.unwrap_or(raw.scaling),
        t,
        u_grid: raw.u_grid,
        alphas: raw.alphas,
        replications,
        master_seed: overrides.seed.or(raw.master_seed).unwrap_or(0),
        workers,
        output_dir: overrides
            .out
            .clone()
            .or(raw.output_dir)
            .unwrap_or_else(|| PathBuf::from("out")),
        gates: raw.gates,
    })
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path, overrides)
}

//! Run configuration: defaults, an optional TOML file, and command-line
//! overrides, merged with flag > file > default precedence. The effective
//! values are echoed into every output header.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

/// Forest dump encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DumpFormat {
    /// Comment-prefixed header lines, then one CSV row per individual.
    Csv,
    /// One JSON header record, then one JSON record per individual.
    Jsonl,
}

/// Optional config file contents; every key can also be set by a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub law: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<DumpFormat>,
    pub workers: Option<usize>,
    pub n_max: Option<usize>,
    pub k_max: Option<usize>,
    pub n_trees: Option<u64>,
    pub cap: Option<usize>,
    pub enum_max: Option<usize>,
    pub mc_trees: Option<u64>,
    pub stat_n_max: Option<usize>,
    pub significance: Option<f64>,
    pub se_limit: Option<f64>,
    pub cell_floor: Option<f64>,
    pub drift: Option<f64>,
    pub drift_sizes: Option<Vec<usize>>,
    pub probe_sizes: Option<Vec<usize>>,
    pub t_max: Option<f64>,
    pub grid: Option<usize>,
    pub runs: Option<usize>,
    pub drift_tol: Option<f64>,
}

/// Loads the config file when a path is given, else an empty config.
pub fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

/// Picks flag over file over default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Picks flag over file; errors when neither is set.
pub fn require<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T> {
    match flag.or(file) {
        Some(v) => Ok(v),
        None => bail!("{what} is required (flag or config file)"),
    }
}

/// Rejects a non-positive count.
pub fn positive(value: u64, what: &str) -> Result<()> {
    if value == 0 {
        bail!("{what} must be positive");
    }
    Ok(())
}

/// Rejects a probability-like knob outside (0, 1).
pub fn unit_open(value: f64, what: &str) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        bail!("{what} must lie strictly between 0 and 1");
    }
    Ok(())
}

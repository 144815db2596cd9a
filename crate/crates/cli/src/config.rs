//! Run configuration: built-in defaults, overridden by a TOML file, then by
//! the `FLORIMETER_SEED` variable (seed only), then by command-line flags.

use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::{Deserialize, Serialize};

use florimeter_core::dynamics::DEFAULT_LEVEL_THRESHOLDS;
use florimeter_core::geom::{DEFAULT_CONF_THRESHOLD, DEFAULT_NMS_IOU};
use florimeter_core::neurokernel::GRADCHECK_TOLERANCE;
use florimeter_core::tfsc::DEFAULT_HIDDEN;

use crate::error::{CliError, CliResult};
use crate::fsio;

pub const SEED_ENV: &str = "FLORIMETER_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub conf: f64,
    pub pr_iou: f64,
    pub iou: Vec<f64>,
    pub per_dataset: bool,
    pub group_by: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            conf: DEFAULT_CONF_THRESHOLD,
            pr_iou: 0.5,
            iou: vec![0.5],
            per_dataset: false,
            group_by: "accession".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountSection {
    pub conf: f64,
    pub nms_iou: f64,
    pub nms: bool,
}

impl Default for CountSection {
    fn default() -> Self {
        Self {
            conf: DEFAULT_CONF_THRESHOLD,
            nms_iou: DEFAULT_NMS_IOU,
            nms: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageSection {
    pub min_mean_total: f64,
    pub val_fraction: f64,
    pub test_years: Vec<i32>,
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for StageSection {
    fn default() -> Self {
        Self {
            min_mean_total: 5.0,
            val_fraction: 0.2,
            test_years: vec![2024],
            hidden: DEFAULT_HIDDEN.to_vec(),
            batch_size: 16,
            lr: 0.001,
            epochs: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub levels: Vec<f64>,
    pub svg: bool,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVEL_THRESHOLDS.to_vec(),
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSection {
    pub seeds: u64,
    pub batch: usize,
    pub tolerance: f64,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            seeds: 20,
            batch: 4,
            tolerance: GRADCHECK_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub eval: EvalSection,
    pub count: CountSection,
    pub stage: StageSection,
    pub dynamics: DynamicsSection,
    pub gradcheck: GradcheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            paths: Paths::default(),
            eval: EvalSection::default(),
            count: CountSection::default(),
            stage: StageSection::default(),
            dynamics: DynamicsSection::default(),
            gradcheck: GradcheckSection::default(),
        }
    }
}

impl RunConfig {
    /// Defaults, then the config file if given, then the seed variable.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => toml::from_str(&fsio::read_text(p)?)
                .map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        if let Ok(v) = std::env::var(SEED_ENV) {
            cfg.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::invalid(format!("{SEED_ENV}='{v}' is not an unsigned integer")))?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the effective configuration next to a command's outputs.
    pub fn echo(&self, dir: &Path) -> CliResult<()> {
        fsio::write(&dir.join(EFFECTIVE_CONFIG), self.to_toml())
    }
}

/// True when `id` was typed on the command line (not a clap default).
pub fn given(m: &ArgMatches, id: &str) -> bool {
    matches!(m.value_source(id), Some(ValueSource::CommandLine))
}

/// Overwrites `slot` with the flag value when the flag was given.
pub fn apply<T: Clone + Send + Sync + 'static>(m: &ArgMatches, id: &str, slot: &mut T) {
    if given(m, id) {
        if let Some(v) = m.get_one::<T>(id) {
            *slot = v.clone();
        }
    }
}

pub fn apply_many<T: Clone + Send + Sync + 'static>(m: &ArgMatches, id: &str, slot: &mut Vec<T>) {
    if given(m, id) {
        if let Some(vs) = m.get_many::<T>(id) {
            *slot = vs.cloned().collect();
        }
    }
}

pub fn apply_path(m: &ArgMatches, id: &str, slot: &mut Option<PathBuf>) {
    if let Some(p) = m.get_one::<PathBuf>(id) {
        *slot = Some(p.clone());
    }
}

pub fn require(slot: &Option<PathBuf>, flag: &str, key: &str) -> CliResult<PathBuf> {
    slot.clone()
        .ok_or_else(|| CliError::invalid(format!("missing --{flag} (or paths.{key} in the config file)")))
}

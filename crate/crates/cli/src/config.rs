//! Declarative run configuration: a sectioned TOML file mapping onto the
//! core `NetworkConfig` plus dataset, output and benchmark settings.
//!
//! Unknown keys are rejected everywhere, and a fully resolved config
//! round-trips through serialization unchanged.

use crate::error::{CliError, Result};
use ffcl_core::{AdamConfig, GoodnessReducer, NetworkConfig, Variant};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// "ffl" | "ffdl" | "ffcl"
    pub variant: String,
    /// Input dimension first, e.g. [784, 500, 500, 500, 500].
    pub layer_dims: Vec<usize>,
    pub classes: usize,
    #[serde(default = "d_unroll")]
    pub unroll: usize,
    #[serde(default = "d_theta")]
    pub theta: f64,
    #[serde(default = "d_true")]
    pub normalize: bool,
    /// "sum" | "mean"
    #[serde(default = "d_goodness")]
    pub goodness: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// "mnist" | "fashion-mnist" | "cifar10" | "blobs"
    pub dataset: String,
    /// Directory holding the dataset files; falls back to $FFCL_DATA_DIR,
    /// then "./data".
    #[serde(default)]
    pub dir: Option<String>,
    /// Optional cap on training samples.
    #[serde(default)]
    pub limit: Option<usize>,
    /// Optional cap on evaluation samples.
    #[serde(default)]
    pub eval_limit: Option<usize>,
    #[serde(default = "d_blobs_per_class")]
    pub blobs_per_class: usize,
    #[serde(default = "d_blobs_dim")]
    pub blobs_dim: usize,
    #[serde(default = "d_blobs_separation")]
    pub blobs_separation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs_per_layer: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs_per_layer: 10,
            batch_size: 512,
            lr: 0.03,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Write a training record every this many epochs.
    pub metric_every: usize,
    /// Save an intermediate checkpoint every this many completed phases
    /// (0 = final checkpoint only).
    pub checkpoint_every: usize,
    /// Record wall-clock milliseconds in metrics. Off, the column is empty,
    /// which keeps metrics byte-identical across identical runs.
    pub record_timing: bool,
    /// Also emit line-delimited JSON next to the CSV.
    pub jsonl: bool,
    /// Persist optimizer state inside checkpoints.
    pub save_optimizer: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "runs".into(),
            metric_every: 1,
            checkpoint_every: 0,
            record_timing: true,
            jsonl: false,
            save_optimizer: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub repetitions: usize,
    /// Explicit seed list; defaults to seed, seed+1, ...
    pub seeds: Option<Vec<u64>>,
    pub parallel: bool,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            repetitions: 3,
            seeds: None,
            parallel: false,
        }
    }
}

fn d_unroll() -> usize {
    3
}
fn d_theta() -> f64 {
    2.0
}
fn d_true() -> bool {
    true
}
fn d_goodness() -> String {
    "sum".into()
}
fn d_blobs_per_class() -> usize {
    250
}
fn d_blobs_dim() -> usize {
    16
}
fn d_blobs_separation() -> f64 {
    6.0
}

/// Known keys and the section each belongs to; bare `--set key=value`
/// overrides resolve through this table.
const KEY_SECTIONS: &[(&str, &str)] = &[
    ("model", "variant"),
    ("model", "layer_dims"),
    ("model", "classes"),
    ("model", "unroll"),
    ("model", "theta"),
    ("model", "normalize"),
    ("model", "goodness"),
    ("data", "dataset"),
    ("data", "dir"),
    ("data", "limit"),
    ("data", "eval_limit"),
    ("data", "blobs_per_class"),
    ("data", "blobs_dim"),
    ("data", "blobs_separation"),
    ("train", "epochs_per_layer"),
    ("train", "batch_size"),
    ("train", "lr"),
    ("train", "beta1"),
    ("train", "beta2"),
    ("train", "eps"),
    ("train", "seed"),
    ("output", "dir"),
    ("output", "metric_every"),
    ("output", "checkpoint_every"),
    ("output", "record_timing"),
    ("output", "jsonl"),
    ("output", "save_optimizer"),
    ("bench", "repetitions"),
    ("bench", "seeds"),
    ("bench", "parallel"),
];

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Deterministic run identifier.
    pub fn run_id(&self) -> String {
        format!(
            "{}-{}-s{}",
            self.data.dataset, self.model.variant, self.train.seed
        )
    }

    pub fn variant(&self) -> Result<Variant> {
        self.model
            .variant
            .parse()
            .map_err(|e: ffcl_core::Error| CliError::Config(e.to_string()))
    }

    pub fn reducer(&self) -> Result<GoodnessReducer> {
        match self.model.goodness.as_str() {
            "sum" => Ok(GoodnessReducer::Sum),
            "mean" => Ok(GoodnessReducer::Mean),
            other => Err(CliError::Config(format!(
                "unknown goodness reducer '{other}' (expected sum or mean)"
            ))),
        }
    }

    pub fn to_network_config(&self) -> Result<NetworkConfig> {
        let mut cfg = NetworkConfig::new(
            self.variant()?,
            self.model.layer_dims.clone(),
            self.model.classes,
        );
        cfg.unroll = self.model.unroll;
        cfg.theta = self.model.theta;
        cfg.normalize = self.model.normalize;
        cfg.reducer = self.reducer()?;
        cfg.epochs_per_layer = self.train.epochs_per_layer;
        cfg.batch_size = self.train.batch_size;
        cfg.optimizer = AdamConfig {
            lr: self.train.lr,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            eps: self.train.eps,
        };
        cfg.seed = self.train.seed;
        cfg.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// Applies one `KEY=VALUE` override onto the raw TOML table. `KEY` is either
/// `section.key` or a bare key unique across sections; `VALUE` is parsed as
/// TOML, falling back to a plain string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{spec}' is not KEY=VALUE")))?;
    let key = key.trim();
    let (section, field) = match key.split_once('.') {
        Some((s, f)) => (s.to_string(), f.to_string()),
        None => {
            let hits: Vec<&str> = KEY_SECTIONS
                .iter()
                .filter(|(_, k)| *k == key)
                .map(|(s, _)| *s)
                .collect();
            match hits.as_slice() {
                [one] => (one.to_string(), key.to_string()),
                [] => {
                    return Err(CliError::Config(format!(
                        "unknown override key '{key}'"
                    )))
                }
                many => {
                    return Err(CliError::Config(format!(
                        "ambiguous override key '{key}': qualify as one of {}",
                        many.iter()
                            .map(|s| format!("{s}.{key}"))
                            .collect::<Vec<_>>()
                            .join(", ")
                    )))
                }
            }
        }
    };
    let value = parse_toml_value(raw.trim());
    let entry = table
        .entry(section.clone())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry.as_table_mut() {
        Some(t) => {
            t.insert(field, value);
            Ok(())
        }
        None => Err(CliError::Config(format!("'{section}' is not a section"))),
    }
}

fn parse_toml_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v exists"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

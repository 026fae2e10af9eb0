//! Dataset resolution: maps the `[data]` config section onto loaded train
//! and evaluation splits.

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use ffcl_core::{load_cifar10, load_idx, synthetic_blobs, Dataset, Rng, Scalar};
use std::path::{Path, PathBuf};

/// Environment variable naming the default dataset directory.
pub const DATA_DIR_ENV: &str = "FFCL_DATA_DIR";

/// Evaluation share of a synthetic blob draw. Train and eval must come from
/// one draw so they share the cluster geometry; a fresh seed would lay out
/// different class centers, which is a different classification problem.
const BLOB_EVAL_FRACTION: f64 = 0.25;

pub struct LoadedData<S> {
    pub train: Dataset<S>,
    pub eval: Dataset<S>,
}

pub fn data_dir(cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = &cfg.data.dir {
        return PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        return PathBuf::from(dir);
    }
    PathBuf::from("data")
}

/// Splits one blob draw class-by-class: the first `train_per_class` samples
/// of each class train, the rest evaluate.
fn split_blobs<S: Scalar>(all: Dataset<S>, classes: usize, train_per_class: usize) -> LoadedData<S> {
    let mut train_idx = Vec::new();
    let mut eval_idx = Vec::new();
    let mut seen = vec![0usize; classes];
    for (i, &label) in all.labels.iter().enumerate() {
        if seen[label] < train_per_class {
            train_idx.push(i);
        } else {
            eval_idx.push(i);
        }
        seen[label] += 1;
    }
    let pick = |idx: &[usize], name: &str| Dataset {
        name: name.into(),
        images: all.images.gather_rows(idx),
        labels: idx.iter().map(|&i| all.labels[i]).collect(),
        classes: all.classes,
    };
    LoadedData {
        train: pick(&train_idx, "blobs"),
        eval: pick(&eval_idx, "blobs"),
    }
}

/// Accepts both plain and gzip files; errors name the missing path.
fn find_file(dir: &Path, base: &str) -> Result<PathBuf> {
    let plain = dir.join(base);
    if plain.exists() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{base}.gz"));
    if gz.exists() {
        return Ok(gz);
    }
    Err(CliError::Data(format!(
        "missing dataset file {} (also tried {})",
        plain.display(),
        gz.display()
    )))
}

fn load_idx_pair<S: Scalar>(dir: &Path, images: &str, labels: &str) -> Result<Dataset<S>> {
    let images = find_file(dir, images)?;
    let labels = find_file(dir, labels)?;
    load_idx(&images, &labels).map_err(|e| CliError::Data(e.to_string()))
}

/// Loads the train and eval splits named by the config.
pub fn load_data<S: Scalar>(cfg: &RunConfig) -> Result<LoadedData<S>> {
    let mut loaded = match cfg.data.dataset.as_str() {
        "mnist" | "fashion-mnist" => {
            let dir = data_dir(cfg);
            LoadedData {
                train: load_idx_pair(&dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte")?,
                eval: load_idx_pair(&dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?,
            }
        }
        "cifar10" => {
            let dir = data_dir(cfg);
            let batches: Vec<PathBuf> = (1..=5)
                .map(|i| find_file(&dir, &format!("data_batch_{i}.bin")))
                .collect::<Result<_>>()?;
            let test = find_file(&dir, "test_batch.bin")?;
            LoadedData {
                train: load_cifar10(&batches).map_err(|e| CliError::Data(e.to_string()))?,
                eval: load_cifar10(&[test]).map_err(|e| CliError::Data(e.to_string()))?,
            }
        }
        "blobs" => {
            let d = &cfg.data;
            let classes = cfg.model.classes;
            let eval_per_class = ((d.blobs_per_class as f64 * BLOB_EVAL_FRACTION) as usize).max(1);
            let total_per_class = d.blobs_per_class + eval_per_class;
            let mut rng = Rng::seed_from_u64(cfg.train.seed);
            let all = synthetic_blobs::<S>(
                total_per_class,
                classes,
                d.blobs_dim,
                d.blobs_separation,
                &mut rng,
            );
            split_blobs(all, classes, d.blobs_per_class)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown dataset '{other}' (expected mnist, fashion-mnist, cifar10 or blobs)"
            )))
        }
    };
    if let Some(limit) = cfg.data.limit {
        loaded.train.truncate(limit);
    }
    if let Some(limit) = cfg.data.eval_limit {
        loaded.eval.truncate(limit);
    }
    for ds in [&loaded.train, &loaded.eval] {
        ds.validate().map_err(|e| CliError::Data(e.to_string()))?;
        if ds.classes != cfg.model.classes {
            return Err(CliError::Data(format!(
                "dataset '{}' has {} classes, config says {}",
                ds.name, ds.classes, cfg.model.classes
            )));
        }
        if ds.input_dim() != cfg.model.layer_dims[0] {
            return Err(CliError::Data(format!(
                "dataset '{}' rows are {}-wide, config says {}",
                ds.name,
                ds.input_dim(),
                cfg.model.layer_dims[0]
            )));
        }
    }
    Ok(loaded)
}

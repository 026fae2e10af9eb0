//! `ffcl eval`: evaluates a checkpoint, emitting one record per layer plus
//! the model record. For unrolled networks the layer indices refer to the
//! final instance, which is where inference reads its votes.

use crate::checkpoint::load_checkpoint;
use crate::config::RunConfig;
use crate::data::load_data;
use crate::error::{CliError, Result};
use crate::metrics::{MetricsRecord, MetricsWriter};
use ffcl_core::{evaluate, model_cost, Scalar};
use std::path::{Path, PathBuf};

pub fn run<S: Scalar>(cfg: &RunConfig, checkpoint: &Path, split: &str) -> Result<PathBuf> {
    let net = load_checkpoint::<S>(checkpoint)?;
    let data = load_data::<S>(cfg)?;
    let ds = match split {
        "train" => &data.train,
        "test" => &data.eval,
        other => {
            return Err(CliError::Config(format!(
                "unknown split '{other}' (expected train or test)"
            )))
        }
    };
    let evaluation = evaluate(&net, ds).map_err(CliError::from)?;
    let cost = model_cost(&net.config).map_err(CliError::from)?;

    let stem = checkpoint
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "checkpoint".into());
    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(format!("eval-{stem}-{}-{split}.csv", cfg.data.dataset));

    let run_id = format!("eval-{}-{}-{split}", stem, cfg.data.dataset);
    let variant = net.config.variant.to_string();
    let mut writer = MetricsWriter::create(&path, cfg.output.jsonl)?;
    for (l, acc) in evaluation.per_layer_accuracy.iter().enumerate() {
        writer.append(&MetricsRecord {
            run_id: run_id.clone(),
            seed: net.config.seed,
            variant: variant.clone(),
            layer: l.to_string(),
            epoch: None,
            loss: None,
            accuracy: Some(*acc),
            wall_ms: None,
            flops: Some(cost.per_layer[l].flops),
        })?;
    }
    writer.append(&MetricsRecord {
        run_id: run_id.clone(),
        seed: net.config.seed,
        variant: variant.clone(),
        layer: "model".into(),
        epoch: None,
        loss: None,
        accuracy: Some(evaluation.model_accuracy),
        wall_ms: None,
        flops: Some(cost.total),
    })?;
    writer.finish()?;

    println!(
        "{variant} on {} ({split}): model accuracy {:.4}, per-layer {:?}",
        ds.name, evaluation.model_accuracy, evaluation.per_layer_accuracy
    );
    Ok(path)
}

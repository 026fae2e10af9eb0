//! `ffcl train`: trains per config, writes a checkpoint and metrics.

use crate::checkpoint::save_checkpoint;
use crate::config::RunConfig;
use crate::data::load_data;
use crate::error::{CliError, Result};
use crate::metrics::{MetricsRecord, MetricsWriter};
use ffcl_core::{train_observed, CellId, PhaseObserver, Scalar, TrainedNetwork};
use std::path::{Path, PathBuf};

pub struct TrainArtifacts {
    pub run_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
}

struct PhaseCheckpoints<'a> {
    every: usize,
    finished: usize,
    dir: &'a Path,
    save_optimizer: bool,
    error: Option<CliError>,
}

impl<S: Scalar> PhaseObserver<S> for PhaseCheckpoints<'_> {
    fn phase_finished(&mut self, _cell: CellId, net: &TrainedNetwork<S>) {
        self.finished += 1;
        if self.every > 0 && self.finished.is_multiple_of(self.every) && self.error.is_none() {
            let path = self.dir.join(format!("checkpoint_phase_{}.ckpt", self.finished));
            if let Err(e) = save_checkpoint(net, &path, self.save_optimizer) {
                self.error = Some(e);
            }
        }
    }
}

pub fn run<S: Scalar>(cfg: &RunConfig) -> Result<TrainArtifacts> {
    let net_cfg = cfg.to_network_config()?;
    let data = load_data::<S>(cfg)?;

    let run_dir = PathBuf::from(&cfg.output.dir).join(cfg.run_id());
    std::fs::create_dir_all(&run_dir)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", run_dir.display())))?;

    let mut observer = PhaseCheckpoints {
        every: cfg.output.checkpoint_every,
        finished: 0,
        dir: &run_dir,
        save_optimizer: cfg.output.save_optimizer,
        error: None,
    };
    let net = train_observed(&net_cfg, &data.train, &mut observer)?;
    if let Some(e) = observer.error {
        return Err(e);
    }

    let checkpoint = run_dir.join("checkpoint.ckpt");
    save_checkpoint(&net, &checkpoint, cfg.output.save_optimizer)?;

    let metrics_path = run_dir.join("metrics.csv");
    let mut writer = MetricsWriter::create(&metrics_path, cfg.output.jsonl)?;
    let every = cfg.output.metric_every.max(1);
    for r in &net.training_log.records {
        if (r.epoch + 1) % every != 0 && r.epoch + 1 != net_cfg.epochs_per_layer {
            continue;
        }
        writer.append(&MetricsRecord {
            run_id: cfg.run_id(),
            seed: cfg.train.seed,
            variant: cfg.model.variant.clone(),
            layer: r.cell.to_string(),
            epoch: Some(r.epoch as u64),
            loss: Some(r.loss),
            accuracy: None,
            wall_ms: cfg.output.record_timing.then_some(r.wall_ms),
            flops: None,
        })?;
    }
    writer.finish()?;

    // keep the fully resolved config next to the artifacts
    std::fs::write(run_dir.join("config.toml"), cfg.to_toml_string())
        .map_err(|e| CliError::Other(format!("cannot write resolved config: {e}")))?;

    eprintln!(
        "trained {} on {} samples; checkpoint {}",
        cfg.run_id(),
        data.train.len(),
        checkpoint.display()
    );
    Ok(TrainArtifacts {
        run_dir,
        checkpoint,
        metrics: metrics_path,
    })
}

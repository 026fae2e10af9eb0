//! Layer-by-layer training schedules.
//!
//! Each training unit (a layer, or a grid cell for the unrolled variant)
//! trains for the full epoch budget before the next unit in schedule order
//! begins; nothing outside the active unit's parameters ever changes.

use super::config::{NetworkConfig, Variant};
use super::network::{CellId, TrainRecord, TrainedNetwork};
use super::schedule::ffcl_schedule;
use crate::data::{embed_label_border_batch, one_hot_batch, Dataset};
use crate::error::{Error, Result};
use crate::layer::{layer_gradients, update, GoodnessCfg, LayerInputs, LayerParams};
use crate::num::{Rng, Scalar};
use std::time::Instant;

/// Callback surface for harnesses that need to watch parameter movement
/// between phases (schedule-isolation and frozen-prefix checks).
pub trait PhaseObserver<S: Scalar> {
    fn phase_started(&mut self, _cell: CellId, _net: &TrainedNetwork<S>) {}
    fn phase_finished(&mut self, _cell: CellId, _net: &TrainedNetwork<S>) {}
}

/// No-op observer.
pub struct NoObserver;
impl<S: Scalar> PhaseObserver<S> for NoObserver {}

/// Trains a network of the configured variant on `data`.
pub fn train<S: Scalar>(config: &NetworkConfig, data: &Dataset<S>) -> Result<TrainedNetwork<S>> {
    train_observed(config, data, &mut NoObserver)
}

/// [`train`] with a phase observer.
pub fn train_observed<S: Scalar>(
    config: &NetworkConfig,
    data: &Dataset<S>,
    obs: &mut dyn PhaseObserver<S>,
) -> Result<TrainedNetwork<S>> {
    config.validate()?;
    data.validate()?;
    if data.input_dim() != config.input_dim() {
        return Err(Error::InvalidConfig(format!(
            "dataset rows are {}-wide but the network expects {}",
            data.input_dim(),
            config.input_dim()
        )));
    }
    if data.classes != config.classes {
        return Err(Error::InvalidConfig(format!(
            "dataset has {} classes but the network expects {}",
            data.classes, config.classes
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = Rng::seed_from_u64(config.seed);
    let mut net = TrainedNetwork::init(config.clone(), &mut rng)?;
    match config.variant {
        Variant::Ffl => run_ffl(&mut net, data, &mut rng, obs)?,
        Variant::Ffdl => run_ffdl(&mut net, data, &mut rng, obs)?,
        Variant::Ffcl => run_ffcl(&mut net, data, &mut rng, obs)?,
    }
    Ok(net)
}

/// Baseline schedule: border-embedded positives/negatives, plain goodness.
pub fn train_ffl<S: Scalar>(config: &NetworkConfig, data: &Dataset<S>) -> Result<TrainedNetwork<S>> {
    expect_variant(config, Variant::Ffl)?;
    train(config, data)
}

/// Direct-label-feed schedule: unmodified images, per-layer label weights.
pub fn train_ffdl<S: Scalar>(
    config: &NetworkConfig,
    data: &Dataset<S>,
) -> Result<TrainedNetwork<S>> {
    expect_variant(config, Variant::Ffdl)?;
    train(config, data)
}

/// Cortical-loop schedule over the unrolled, weight-shared grid.
pub fn train_ffcl<S: Scalar>(
    config: &NetworkConfig,
    data: &Dataset<S>,
) -> Result<TrainedNetwork<S>> {
    expect_variant(config, Variant::Ffcl)?;
    train(config, data)
}

fn expect_variant(config: &NetworkConfig, want: Variant) -> Result<()> {
    if config.variant != want {
        return Err(Error::VariantMisuse(format!(
            "config is {}, expected {}",
            config.variant, want
        )));
    }
    Ok(())
}

fn goodness_cfg<S: Scalar>(config: &NetworkConfig) -> GoodnessCfg<S> {
    GoodnessCfg::new(config.theta, config.reducer)
}

/// Aborts the run when a training step produced anything non-finite.
fn check_step<S: Scalar>(
    loss: S,
    params: &LayerParams<S>,
    cell: CellId,
    epoch: usize,
    batch: usize,
) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            what: "loss",
            cell: cell.to_string(),
            epoch,
            batch,
        });
    }
    if !params.all_finite() {
        return Err(Error::NonFinite {
            what: "parameter",
            cell: cell.to_string(),
            epoch,
            batch,
        });
    }
    Ok(())
}

/// Yields shuffled index batches for one epoch.
struct EpochBatches {
    indices: Vec<usize>,
    batch_size: usize,
}

impl EpochBatches {
    fn new(n: usize, batch_size: usize, rng: &mut Rng) -> Self {
        let mut indices: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut indices);
        EpochBatches {
            indices,
            batch_size,
        }
    }

    fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.chunks(self.batch_size)
    }
}

fn run_ffl<S: Scalar>(
    net: &mut TrainedNetwork<S>,
    data: &Dataset<S>,
    rng: &mut Rng,
    obs: &mut dyn PhaseObserver<S>,
) -> Result<()> {
    let cfg = net.config.clone();
    let gcfg = goodness_cfg::<S>(&cfg);
    let n = data.len();
    let x_pos_full = embed_label_border_batch(&data.images, &data.labels, cfg.classes)?;

    for l in 0..cfg.num_layers() {
        let cell = CellId::Layer(l);
        obs.phase_started(cell, net);
        // Positive inputs are fixed for the whole phase: the prefix layers
        // are frozen, so their activations can be computed once. Negatives
        // get fresh labels every epoch and re-run the prefix per batch.
        let pos_prefix = net.forward_prefix(&x_pos_full, l)?;
        for epoch in 0..cfg.epochs_per_layer {
            let started = Instant::now();
            let mut loss_acc = 0.0f64;
            let mut margin_acc = 0.0f64;
            for (bi, batch) in EpochBatches::new(n, cfg.batch_size, rng).iter().enumerate() {
                let xb_pos = pos_prefix.gather_rows(batch);
                let neg_classes: Vec<usize> = batch
                    .iter()
                    .map(|&i| rng.choose_excluding(cfg.classes, data.labels[i]))
                    .collect();
                let raw = data.images.gather_rows(batch);
                let x_neg = embed_label_border_batch(&raw, &neg_classes, cfg.classes)?;
                let xb_neg = net.forward_prefix(&x_neg, l)?;
                let (loss, margin, grads) = layer_gradients(
                    &net.layers[l],
                    &LayerInputs::Plain {
                        x_pos: &xb_pos,
                        x_neg: &xb_neg,
                    },
                    &gcfg,
                )?;
                update(&mut net.layers[l], &grads)?;
                check_step(loss, &net.layers[l], cell, epoch, bi)?;
                loss_acc += loss.to_f64_lossy() * batch.len() as f64;
                margin_acc += margin.to_f64_lossy() * batch.len() as f64;
            }
            net.training_log.records.push(TrainRecord {
                cell,
                epoch,
                loss: loss_acc / n as f64,
                raw_margin: margin_acc / n as f64,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
        obs.phase_finished(cell, net);
    }
    Ok(())
}

fn run_ffdl<S: Scalar>(
    net: &mut TrainedNetwork<S>,
    data: &Dataset<S>,
    rng: &mut Rng,
    obs: &mut dyn PhaseObserver<S>,
) -> Result<()> {
    let cfg = net.config.clone();
    let gcfg = goodness_cfg::<S>(&cfg);
    let n = data.len();

    for l in 0..cfg.num_layers() {
        let cell = CellId::Layer(l);
        obs.phase_started(cell, net);
        // The raw image is never border-modified; labels reach this layer
        // only through its label weights. The frozen prefix is label-free,
        // so one pass over the dataset serves the whole phase.
        let prefix = net.forward_prefix(&data.images, l)?;
        for epoch in 0..cfg.epochs_per_layer {
            let started = Instant::now();
            let mut loss_acc = 0.0f64;
            let mut margin_acc = 0.0f64;
            for (bi, batch) in EpochBatches::new(n, cfg.batch_size, rng).iter().enumerate() {
                let xb = prefix.gather_rows(batch);
                let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
                let neg_classes: Vec<usize> = labels
                    .iter()
                    .map(|&c| rng.choose_excluding(cfg.classes, c))
                    .collect();
                let l_pos = one_hot_batch::<S>(&labels, cfg.classes);
                let l_neg = one_hot_batch::<S>(&neg_classes, cfg.classes);
                let (loss, margin, grads) = layer_gradients(
                    &net.layers[l],
                    &LayerInputs::Labeled {
                        x: &xb,
                        label_pos: &l_pos,
                        label_neg: &l_neg,
                        feedback: None,
                    },
                    &gcfg,
                )?;
                update(&mut net.layers[l], &grads)?;
                check_step(loss, &net.layers[l], cell, epoch, bi)?;
                loss_acc += loss.to_f64_lossy() * batch.len() as f64;
                margin_acc += margin.to_f64_lossy() * batch.len() as f64;
            }
            net.training_log.records.push(TrainRecord {
                cell,
                epoch,
                loss: loss_acc / n as f64,
                raw_margin: margin_acc / n as f64,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
        obs.phase_finished(cell, net);
    }
    Ok(())
}

fn run_ffcl<S: Scalar>(
    net: &mut TrainedNetwork<S>,
    data: &Dataset<S>,
    rng: &mut Rng,
    obs: &mut dyn PhaseObserver<S>,
) -> Result<()> {
    let cfg = net.config.clone();
    let gcfg = goodness_cfg::<S>(&cfg);
    let n = data.len();
    let total_layers = cfg.num_layers();

    for (inst, l) in ffcl_schedule(cfg.unroll, total_layers) {
        let cell = CellId::Cell {
            instance: inst,
            layer: l,
        };
        obs.phase_started(cell, net);
        for epoch in 0..cfg.epochs_per_layer {
            let started = Instant::now();
            let mut loss_acc = 0.0f64;
            let mut margin_acc = 0.0f64;
            for (bi, batch) in EpochBatches::new(n, cfg.batch_size, rng).iter().enumerate() {
                let xb = data.images.gather_rows(batch);
                let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
                let neg_classes: Vec<usize> = labels
                    .iter()
                    .map(|&c| rng.choose_excluding(cfg.classes, c))
                    .collect();
                let l_pos = one_hot_batch::<S>(&labels, cfg.classes);
                let l_neg = one_hot_batch::<S>(&neg_classes, cfg.classes);

                // Shared weights move every batch, so the grid (including
                // the frozen feedback source a[inst-1][l+1]) is recomputed
                // with the current parameters. No gradient flows into it.
                let grid = net.forward_grid(&xb, inst, l)?;
                let x_in = if l == 0 { &xb } else { &grid.a[inst][l - 1] };
                let fb_src = if cfg.cell_has_feedback(inst, l) {
                    Some(&grid.a[inst - 1][l + 1])
                } else {
                    None
                };

                // Temporarily attach this cell's feedback tensor so the
                // layer update advances it together with the shared ones.
                if let Some(p) = net.feedback.remove(&(inst, l)) {
                    net.layers[l].attach_feedback(p.w_fb, p.adam);
                }
                let step = (|| -> Result<(S, S)> {
                    let (loss, margin, grads) = layer_gradients(
                        &net.layers[l],
                        &LayerInputs::Labeled {
                            x: x_in,
                            label_pos: &l_pos,
                            label_neg: &l_neg,
                            feedback: fb_src,
                        },
                        &gcfg,
                    )?;
                    update(&mut net.layers[l], &grads)?;
                    Ok((loss, margin))
                })();
                if let Some((w_fb, adam)) = net.layers[l].detach_feedback() {
                    net.feedback
                        .insert((inst, l), super::network::FeedbackParam { w_fb, adam });
                }
                let (loss, margin) = step?;
                check_step(loss, &net.layers[l], cell, epoch, bi)?;
                if let Some(p) = net.feedback.get(&(inst, l)) {
                    if !p.w_fb.all_finite() {
                        return Err(Error::NonFinite {
                            what: "feedback parameter",
                            cell: cell.to_string(),
                            epoch,
                            batch: bi,
                        });
                    }
                }
                loss_acc += loss.to_f64_lossy() * batch.len() as f64;
                margin_acc += margin.to_f64_lossy() * batch.len() as f64;
            }
            net.training_log.records.push(TrainRecord {
                cell,
                epoch,
                loss: loss_acc / n as f64,
                raw_margin: margin_acc / n as f64,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
        obs.phase_finished(cell, net);
    }
    Ok(())
}

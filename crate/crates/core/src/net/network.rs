//! Network state: the layer stack, the cortical-loop feedback tensors, and
//! the forward machinery shared by training and inference.

use super::config::{NetworkConfig, Variant};
use crate::error::{Error, Result};
use crate::layer::{forward_sum_fb, LayerParams};
use crate::num::{AdamState, Matrix, Rng, Scalar};
use std::collections::BTreeMap;

/// Epsilon guard for inter-layer row normalization.
pub const NORM_EPS: f64 = 1e-8;

/// A per-cell feedback weight and its optimizer state.
#[derive(Clone, Debug)]
pub struct FeedbackParam<S> {
    pub w_fb: Matrix<S>,
    pub adam: AdamState<S>,
}

/// Identifies a training unit: a plain layer, or a cell of the unrolled grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellId {
    Layer(usize),
    Cell { instance: usize, layer: usize },
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellId::Layer(l) => write!(f, "{l}"),
            CellId::Cell { instance, layer } => write!(f, "{instance}.{layer}"),
        }
    }
}

/// One per-(cell, epoch) loss record.
#[derive(Clone, Debug)]
pub struct TrainRecord {
    pub cell: CellId,
    pub epoch: usize,
    pub loss: f64,
    /// Diagnostic `mean(goodness_neg - goodness_pos)`; never optimized.
    pub raw_margin: f64,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainingLog {
    pub records: Vec<TrainRecord>,
}

/// A trained (or initialized) network.
///
/// For FFCL the feedforward, bias and label tensors of layer `l` are shared
/// by every unrolled instance — they are stored once in `layers` — while
/// each feedback-receiving cell `(n, l)` owns a `FeedbackParam` here. The
/// sharing invariant therefore holds by construction.
#[derive(Clone, Debug)]
pub struct TrainedNetwork<S> {
    pub config: NetworkConfig,
    pub layers: Vec<LayerParams<S>>,
    pub feedback: BTreeMap<(usize, usize), FeedbackParam<S>>,
    pub training_log: TrainingLog,
}

impl<S: Scalar> TrainedNetwork<S> {
    /// Seeded initialization. Draw order is fixed: the layer stack in order
    /// (weights then label weights per layer), then feedback tensors in
    /// `(instance, layer)` order.
    pub fn init(config: NetworkConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let label_dim = config.variant.uses_label_weights().then_some(config.classes);
        let layers: Vec<LayerParams<S>> = (0..config.num_layers())
            .map(|l| {
                LayerParams::init(
                    config.in_dim(l),
                    config.out_dim(l),
                    label_dim,
                    &config.optimizer,
                    rng,
                )
            })
            .collect();
        let mut feedback = BTreeMap::new();
        if config.variant == Variant::Ffcl {
            for n in 1..config.unroll {
                for l in 0..config.num_layers() {
                    if config.cell_has_feedback(n, l) {
                        let (rows, cols) = (config.out_dim(l), config.fb_dim(l));
                        let mut w_fb = Matrix::zeros(rows, cols);
                        rng.fill_uniform_signed(&mut w_fb, 1.0 / (cols as f64).sqrt());
                        feedback.insert(
                            (n, l),
                            FeedbackParam {
                                w_fb,
                                adam: AdamState::new(rows, cols, &config.optimizer),
                            },
                        );
                    }
                }
            }
        }
        Ok(TrainedNetwork {
            config,
            layers,
            feedback,
            training_log: TrainingLog::default(),
        })
    }

    /// Assembles a network from existing tensors (checkpoint loading and
    /// degenerate test fixtures). Shape consistency is checked; the config
    /// invariants are not re-validated, so test-only degenerate grids such
    /// as `unroll = 1` are representable.
    pub fn from_parts(
        config: NetworkConfig,
        layers: Vec<LayerParams<S>>,
        feedback: BTreeMap<(usize, usize), FeedbackParam<S>>,
    ) -> Result<Self> {
        if layers.len() != config.num_layers() {
            return Err(Error::InvalidConfig(format!(
                "expected {} layers, got {}",
                config.num_layers(),
                layers.len()
            )));
        }
        for (l, p) in layers.iter().enumerate() {
            if p.in_dim() != config.in_dim(l) || p.out_dim() != config.out_dim(l) {
                return Err(Error::InvalidConfig(format!(
                    "layer {l} is {}x{}, config says {}x{}",
                    p.out_dim(),
                    p.in_dim(),
                    config.out_dim(l),
                    config.in_dim(l)
                )));
            }
        }
        for (&(n, l), fb) in &feedback {
            if !config.cell_has_feedback(n, l) {
                return Err(Error::InvalidConfig(format!(
                    "cell ({n},{l}) cannot carry feedback weights"
                )));
            }
            if fb.w_fb.shape() != (config.out_dim(l), config.fb_dim(l)) {
                return Err(Error::InvalidConfig(format!(
                    "feedback tensor ({n},{l}) has shape {:?}",
                    fb.w_fb.shape()
                )));
            }
        }
        Ok(TrainedNetwork {
            config,
            layers,
            feedback,
            training_log: TrainingLog::default(),
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    fn norm_eps(&self) -> S {
        S::from_f64_lossy(NORM_EPS)
    }

    /// The activation handed to downstream consumers (next layer or feedback
    /// edge): relu, then row normalization when enabled.
    pub fn propagate_activation(&self, s: &Matrix<S>) -> Matrix<S> {
        let a = s.relu();
        if self.config.normalize {
            a.l2_normalize_rows(self.norm_eps())
        } else {
            a
        }
    }

    /// Runs layers `[0, upto)` in propagation form (no labels, no feedback)
    /// and returns the input to layer `upto`.
    pub fn forward_prefix(&self, x: &Matrix<S>, upto: usize) -> Result<Matrix<S>> {
        let mut a = x.clone();
        for l in 0..upto {
            let s = crate::layer::forward_sum(&self.layers[l], &a)?;
            a = self.propagate_activation(&s);
        }
        Ok(a)
    }

    /// Materializes grid activations with the current weights: instances
    /// `0..max_instance` fully, then `layers_in_last` layers of instance
    /// `max_instance`. Feedback weights are sourced exclusively from the
    /// feedback map (cell state temporarily attached to a layer during its
    /// training phase is that cell's own and never feeds the grid).
    pub fn forward_grid(
        &self,
        x: &Matrix<S>,
        max_instance: usize,
        layers_in_last: usize,
    ) -> Result<GridActivations<S>> {
        let total_layers = self.num_layers();
        debug_assert!(layers_in_last <= total_layers);
        let mut grid = GridActivations {
            s: Vec::with_capacity(max_instance + 1),
            a: Vec::with_capacity(max_instance + 1),
        };
        for n in 0..=max_instance {
            let layers_here = if n == max_instance {
                layers_in_last
            } else {
                total_layers
            };
            let mut s_row = Vec::with_capacity(layers_here);
            let mut a_row = Vec::with_capacity(layers_here);
            for l in 0..layers_here {
                let input = if l == 0 { x } else { &a_row[l - 1] };
                let s = match self.feedback.get(&(n, l)) {
                    Some(p) => {
                        let fb_src = &grid.a[n - 1][l + 1];
                        let mut s = input.matmul_nt(&self.layers[l].w_in)?;
                        s.add_in_place(&fb_src.matmul_nt(&p.w_fb)?)?;
                        s.add_row_broadcast(&self.layers[l].b)?
                    }
                    None => forward_sum_fb(&self.layers[l], input, None)?,
                };
                a_row.push(self.propagate_activation(&s));
                s_row.push(s);
            }
            grid.s.push(s_row);
            grid.a.push(a_row);
        }
        Ok(grid)
    }

    /// True when every parameter tensor in the network is finite.
    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(LayerParams::all_finite)
            && self.feedback.values().all(|f| f.w_fb.all_finite())
    }
}

/// Activations (and pre-activations) of an unrolled forward pass, indexed
/// `[instance][layer]`.
pub struct GridActivations<S> {
    pub s: Vec<Vec<Matrix<S>>>,
    pub a: Vec<Vec<Matrix<S>>>,
}

/// Per-layer, per-class goodness of one input plus the derived votes.
#[derive(Clone, Debug)]
pub struct Prediction<S> {
    /// `evaluated_layers x classes` goodness values.
    pub per_layer_goodness: Matrix<S>,
    pub per_layer_argmax: Vec<usize>,
    /// Argmax over classes of the per-layer goodness summed across layers.
    pub model_argmax: usize,
    /// Layer forward passes the inference executed.
    pub layer_passes: usize,
}

/// Lowest index wins ties, so zero-weight networks classify deterministically.
pub(crate) fn argmax_row<S: Scalar>(row: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

impl<S: Scalar> Prediction<S> {
    /// Derives the votes from a goodness matrix.
    pub fn from_goodness(per_layer_goodness: Matrix<S>, layer_passes: usize) -> Self {
        let per_layer_argmax = (0..per_layer_goodness.rows())
            .map(|l| argmax_row(per_layer_goodness.row(l)))
            .collect();
        let summed = per_layer_goodness.col_sums();
        let model_argmax = argmax_row(summed.row(0));
        Prediction {
            per_layer_goodness,
            per_layer_argmax,
            model_argmax,
            layer_passes,
        }
    }
}

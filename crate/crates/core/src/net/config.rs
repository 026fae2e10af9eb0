//! Network architecture and training hyperparameters.

use crate::error::{Error, Result};
use crate::layer::GoodnessReducer;
use crate::num::AdamConfig;

/// The three training/inference variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Baseline forward-forward: labels embedded into the input border.
    Ffl,
    /// Direct label feed: labels enter every layer through label weights.
    Ffdl,
    /// Cortical loops: FFDL unrolled with weight sharing and per-instance
    /// feedback weights.
    Ffcl,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Ffl => "ffl",
            Variant::Ffdl => "ffdl",
            Variant::Ffcl => "ffcl",
        }
    }

    pub fn uses_label_weights(&self) -> bool {
        matches!(self, Variant::Ffdl | Variant::Ffcl)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ffl" => Ok(Variant::Ffl),
            "ffdl" => Ok(Variant::Ffdl),
            "ffcl" => Ok(Variant::Ffcl),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant '{other}' (expected ffl, ffdl or ffcl)"
            ))),
        }
    }
}

/// Architecture plus hyperparameters for one training run.
#[derive(Clone, Debug)]
pub struct NetworkConfig {
    pub variant: Variant,
    /// Input dimension first, e.g. `[784, 500, 500, 500, 500]`.
    pub layer_dims: Vec<usize>,
    /// Class count.
    pub classes: usize,
    /// Unroll count; meaningful for FFCL only and must be >= 2 there.
    pub unroll: usize,
    /// Goodness threshold.
    pub theta: f64,
    pub epochs_per_layer: usize,
    pub batch_size: usize,
    /// Row-wise L2 normalization of activations between layers.
    pub normalize: bool,
    pub reducer: GoodnessReducer,
    pub optimizer: AdamConfig,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(variant: Variant, layer_dims: Vec<usize>, classes: usize) -> Self {
        NetworkConfig {
            variant,
            layer_dims,
            classes,
            unroll: if variant == Variant::Ffcl { 3 } else { 1 },
            theta: 2.0,
            epochs_per_layer: 10,
            batch_size: 512,
            normalize: true,
            reducer: GoodnessReducer::Sum,
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }

    /// Number of trainable layers.
    pub fn num_layers(&self) -> usize {
        self.layer_dims.len().saturating_sub(1)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Input width of layer `l`.
    pub fn in_dim(&self, l: usize) -> usize {
        self.layer_dims[l]
    }

    /// Output width of layer `l`.
    pub fn out_dim(&self, l: usize) -> usize {
        self.layer_dims[l + 1]
    }

    /// Whether grid cell `(instance, layer)` carries feedback weights:
    /// every instance past the first, except the last layer, which has no
    /// later layer to listen to.
    pub fn cell_has_feedback(&self, instance: usize, layer: usize) -> bool {
        self.variant == Variant::Ffcl && instance >= 1 && layer + 1 < self.num_layers()
    }

    /// Width of the feedback source for layer `l`: the output of layer `l+1`.
    pub fn fb_dim(&self, layer: usize) -> usize {
        self.layer_dims[layer + 2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "layer_dims must list the input dimension and at least one layer".into(),
            ));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::InvalidConfig("all layer dims must be >= 1".into()));
        }
        if self.classes < 2 {
            return Err(Error::InvalidConfig("classes must be >= 2".into()));
        }
        if self.variant == Variant::Ffcl && self.unroll < 2 {
            return Err(Error::InvalidConfig(
                "FFCL requires unroll >= 2 (use FFDL for a single instance)".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidConfig("theta must be finite".into()));
        }
        if !(self.optimizer.lr.is_finite() && self.optimizer.lr > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.variant == Variant::Ffl && self.classes > self.input_dim() {
            return Err(Error::InvalidConfig(format!(
                "FFL border embedding needs input_dim >= classes ({} < {})",
                self.input_dim(),
                self.classes
            )));
        }
        Ok(())
    }
}

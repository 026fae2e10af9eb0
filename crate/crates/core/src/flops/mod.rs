//! Analytic inference-cost model and the instrumented runtime counter that
//! validates it.
//!
//! Counting convention: one fused multiply-accumulate, one standalone add,
//! or one activation evaluation each cost a single FLOP. A layer of M inputs
//! and N outputs therefore prices its matmul at `M*N`, the bias at `N` and
//! the activation at `N`. The squared-goodness reduction and inter-layer
//! normalization carry no cost under this convention, and the unrolled
//! variant excludes the feedback matmul by default (an opt-in flag prices it
//! honestly at `N * fb_dim` per receiving cell).

mod counting;

pub use counting::{infer_counting, instrumented_count};

use crate::error::Result;
use crate::net::{NetworkConfig, Variant};

/// Baseline per-layer inference cost: every class re-runs the layer.
pub fn ffl_layer_flops(m: u64, n: u64, c: u64) -> u64 {
    m * n * c + 2 * n * c
}

/// Direct-label-feed per-layer inference cost: one feedforward pass plus a
/// label sweep over all classes.
pub fn ffdl_layer_flops(m: u64, n: u64, c: u64) -> u64 {
    m * n + n * c * c + n * c + 2 * n
}

/// Unrolled per-layer inference cost: one label-fed layer per instance.
pub fn ffcl_layer_flops(m: u64, n: u64, c: u64, unroll: u64) -> u64 {
    unroll * ffdl_layer_flops(m, n, c)
}

/// True when the label-fed sweep beats re-running the layer per class:
/// `M + C^2 + 2 < M*C + C`.
pub fn advantage_condition(m: u64, c: u64) -> bool {
    m + c * c + 2 < m * c + c
}

/// Per-layer and total cost of one model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub variant: Variant,
    /// Input width per layer.
    pub m_list: Vec<u64>,
    /// Output width per layer.
    pub n_list: Vec<u64>,
    pub classes: u64,
    pub unroll: u64,
    pub per_layer: Vec<LayerCost>,
    pub total: u64,
    /// True when the first-layer figure was taken from the published
    /// reference table instead of the formula.
    pub table_compat: bool,
    pub include_feedback: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerCost {
    pub layer: usize,
    pub flops: u64,
}

/// The reference tables report 420,000 for the 784->500 first layer of the
/// four-layer model — a figure neither per-layer formula reproduces (they
/// give 3,930,000 and 448,000). Compat mode takes it as given so published
/// totals can be matched; the default mode stays on the formulas.
pub const COMPAT_FIRST_LAYER_FLOPS: u64 = 420_000;

#[derive(Clone, Copy, Debug, Default)]
pub struct CostOptions {
    /// Price the feedback matmul of receiving cells.
    pub include_feedback: bool,
    /// Substitute the published first-layer figure.
    pub table_compat: bool,
}

/// Applies the per-layer formula of `config.variant` across its
/// architecture.
pub fn model_cost(config: &NetworkConfig) -> Result<CostReport> {
    model_cost_with(config, CostOptions::default())
}

pub fn model_cost_with(config: &NetworkConfig, opts: CostOptions) -> Result<CostReport> {
    config.validate()?;
    let c = config.classes as u64;
    let unroll = match config.variant {
        Variant::Ffcl => config.unroll as u64,
        _ => 1,
    };
    let layers = config.num_layers();
    let mut per_layer = Vec::with_capacity(layers);
    let mut m_list = Vec::with_capacity(layers);
    let mut n_list = Vec::with_capacity(layers);
    for l in 0..layers {
        let m = config.in_dim(l) as u64;
        let n = config.out_dim(l) as u64;
        m_list.push(m);
        n_list.push(n);
        let mut flops = match config.variant {
            Variant::Ffl => ffl_layer_flops(m, n, c),
            Variant::Ffdl => ffdl_layer_flops(m, n, c),
            Variant::Ffcl => ffcl_layer_flops(m, n, c, unroll),
        };
        if opts.include_feedback && config.variant == Variant::Ffcl {
            // one feedback matmul per receiving cell: instances 1..unroll
            if config.cell_has_feedback(1, l) {
                flops += (unroll - 1) * n * config.fb_dim(l) as u64;
            }
        }
        if opts.table_compat && l == 0 {
            flops = COMPAT_FIRST_LAYER_FLOPS * unroll;
        }
        per_layer.push(LayerCost { layer: l, flops });
    }
    let total = per_layer.iter().map(|lc| lc.flops).sum();
    Ok(CostReport {
        variant: config.variant,
        m_list,
        n_list,
        classes: c,
        unroll,
        per_layer,
        total,
        table_compat: opts.table_compat,
        include_feedback: opts.include_feedback,
    })
}

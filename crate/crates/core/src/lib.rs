//! Forward-forward learning without backpropagation.
//!
//! Three variants of goodness-based local layer-wise training — the baseline
//! two-pass scheme, direct label feeding, and cortical loops over an
//! unrolled weight-shared grid — plus dataset ingestion, an analytic
//! inference FLOP model with an instrumented runtime counter, and the
//! numeric plumbing (dense matrices, Adam, seeded randomness, a
//! finite-difference oracle) they stand on.
//!
//! Everything numeric is generic over the [`Scalar`] precision; `f32` is the
//! default compute type and `f64` backs the oracle and determinism
//! harnesses.

pub mod data;
pub mod error;
pub mod flops;
pub mod layer;
pub mod net;
pub mod num;

pub use error::{DataError, Error, Result};
pub use num::{
    adam_step, finite_diff_grad, sigmoid, softplus, AdamConfig, AdamState, Matrix, Rng, Scalar,
};

pub use data::{
    embed_label_border, embed_label_border_batch, load_cifar10, load_idx, make_pos_neg,
    one_hot_batch, synthetic_blobs, write_idx_images, write_idx_labels, Dataset, PosNeg,
};
pub use flops::{
    advantage_condition, ffcl_layer_flops, ffdl_layer_flops, ffl_layer_flops, infer_counting,
    instrumented_count, model_cost, model_cost_with, CostOptions, CostReport, LayerCost,
    COMPAT_FIRST_LAYER_FLOPS,
};
pub use layer::{
    forward_activation, forward_sum, forward_sum_fb, goodness_plain, goodness_with_label,
    layer_gradients, layer_loss, pair_loss, raw_margin, update, Goodness, GoodnessCfg,
    GoodnessReducer, LayerGrads, LayerInputs, LayerParams,
};
pub use net::{
    evaluate, ffcl_schedule, infer, infer_ffcl, infer_ffdl, infer_ffl, train, train_ffcl,
    train_ffdl, train_ffl, train_observed, CellId, Evaluation, FeedbackParam, NetworkConfig,
    NoObserver, PhaseObserver, Prediction, TrainRecord, TrainedNetwork, TrainingLog, Variant,
};

/// Concrete single-precision aliases (the default compute type).
pub type Matrix32 = Matrix<f32>;
pub type Network32 = TrainedNetwork<f32>;
pub type Dataset32 = Dataset<f32>;

/// Concrete double-precision aliases (oracle and determinism work).
pub type Matrix64 = Matrix<f64>;
pub type Network64 = TrainedNetwork<f64>;
pub type Dataset64 = Dataset<f64>;

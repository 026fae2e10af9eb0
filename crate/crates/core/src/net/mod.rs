//! Network assembly: the three variants, their training schedules, and the
//! three inference procedures with vote aggregation.

mod config;
mod infer;
mod network;
mod schedule;
mod train;

pub use config::{NetworkConfig, Variant};
pub use infer::{evaluate, infer, infer_ffcl, infer_ffdl, infer_ffl, Evaluation};
pub use network::{
    CellId, FeedbackParam, GridActivations, Prediction, TrainRecord, TrainedNetwork, TrainingLog,
    NORM_EPS,
};
pub use schedule::ffcl_schedule;
pub use train::{train, train_ffcl, train_ffdl, train_ffl, train_observed, NoObserver, PhaseObserver};

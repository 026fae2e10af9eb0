//! Library surface of the `ffcl` command-line tool, exposed so integration
//! tests can drive config parsing, metrics and checkpoints directly.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::RunConfig;
pub use error::CliError;
pub use metrics::{parse_metrics_file, MetricsRecord, METRICS_HEADER};

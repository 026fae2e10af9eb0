//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "dimension mismatch in {op}: left operand is {lhs_rows}x{lhs_cols}, \
         right operand is {rhs_rows}x{rhs_cols}"
    )]
    DimMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("matrix data length {len} does not match {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },

    #[error("class index {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },

    /// An operation that only exists for a particular network variant was
    /// invoked on parameters of another variant, e.g. label goodness on a
    /// layer without label weights.
    #[error("variant misuse: {0}")]
    VariantMisuse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Numeric abort: a NaN or infinity surfaced during a training step.
    #[error("non-finite {what} while training cell {cell} (epoch {epoch}, batch {batch})")]
    NonFinite {
        what: &'static str,
        cell: String,
        epoch: usize,
        batch: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Data(#[from] DataError),
}

/// Diagnostics for dataset ingestion. Every malformed input maps to a
/// distinct variant so callers can assert on the failure mode.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {path}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: String,
        expected: u32,
        found: u32,
    },

    #[error("truncated {path}: needed {needed} bytes, found {found}")]
    Truncated {
        path: String,
        needed: usize,
        found: usize,
    },

    #[error("{path}: {extra} trailing bytes after the declared payload")]
    TrailingBytes { path: String, extra: usize },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: file size {len} is not a multiple of the {record}-byte record size")]
    BadRecordSize {
        path: String,
        len: usize,
        record: usize,
    },

    #[error("{path}: record {index} has label {label}, out of range for {classes} classes")]
    LabelOutOfRange {
        path: String,
        index: usize,
        label: u8,
        classes: usize,
    },
}

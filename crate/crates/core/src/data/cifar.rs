//! CIFAR-10 binary ingestion: 3073-byte records, one label byte followed by
//! 3072 channel-major pixel bytes.

use super::Dataset;
use crate::error::{DataError, Result};
use crate::num::{Matrix, Scalar};
use std::path::Path;

pub const CIFAR_RECORD_BYTES: usize = 3073;
pub const CIFAR_PIXELS: usize = 3072;
pub const CIFAR_CLASSES: usize = 10;

/// Loads one or more CIFAR-10 binary batch files into a single dataset,
/// pixels scaled to `[0, 1]`, flattened channel-major as stored on disk.
pub fn load_cifar10<S: Scalar>(batch_paths: &[impl AsRef<Path>]) -> Result<Dataset<S>> {
    let mut rows: Vec<S> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let scale = 1.0 / 255.0;
    for path in batch_paths {
        let path = path.as_ref();
        let bytes = super::idx::read_file_bytes(path)?;
        if bytes.len() % CIFAR_RECORD_BYTES != 0 {
            return Err(DataError::BadRecordSize {
                path: path.display().to_string(),
                len: bytes.len(),
                record: CIFAR_RECORD_BYTES,
            }
            .into());
        }
        for (index, record) in bytes.chunks_exact(CIFAR_RECORD_BYTES).enumerate() {
            let label = record[0];
            if label as usize >= CIFAR_CLASSES {
                return Err(DataError::LabelOutOfRange {
                    path: path.display().to_string(),
                    index,
                    label,
                    classes: CIFAR_CLASSES,
                }
                .into());
            }
            labels.push(label as usize);
            rows.extend(record[1..].iter().map(|&b| S::from_f64_lossy(b as f64 * scale)));
        }
    }
    let count = labels.len();
    let images = Matrix::from_vec(count, CIFAR_PIXELS, rows).expect("record arithmetic");
    Ok(Dataset {
        name: "cifar10".into(),
        images,
        labels,
        classes: CIFAR_CLASSES,
    })
}

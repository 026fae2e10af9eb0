//! IDX image/label ingestion (big-endian headers, unsigned-byte payload).
//! Gzip-compressed files are accepted transparently by extension sniffing.

use super::Dataset;
use crate::error::{DataError, Result};
use crate::num::{Matrix, Scalar};
use flate2::read::GzDecoder;
use std::io::Read;
use std::path::Path;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub(crate) fn read_file_bytes(path: &Path) -> Result<Vec<u8>, DataError> {
    let display = path.display().to_string();
    let io_err = |source| DataError::Io {
        path: display.clone(),
        source,
    };
    let raw = std::fs::read(path).map_err(io_err)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|source| DataError::Io {
                path: display,
                source,
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct BeReader<'a> {
    path: String,
    bytes: &'a [u8],
    off: usize,
}

impl<'a> BeReader<'a> {
    fn new(path: &Path, bytes: &'a [u8]) -> Self {
        BeReader {
            path: path.display().to_string(),
            bytes,
            off: 0,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DataError> {
        if self.off + n > self.bytes.len() {
            return Err(DataError::Truncated {
                path: self.path.clone(),
                needed: self.off + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.off..self.off + n];
        self.off += n;
        Ok(s)
    }

    fn read_u32(&mut self) -> Result<u32, DataError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn finish(&self) -> Result<(), DataError> {
        if self.off != self.bytes.len() {
            return Err(DataError::TrailingBytes {
                path: self.path.clone(),
                extra: self.bytes.len() - self.off,
            });
        }
        Ok(())
    }
}

fn parse_images<S: Scalar>(path: &Path, bytes: &[u8]) -> Result<(usize, Matrix<S>), DataError> {
    let mut r = BeReader::new(path, bytes);
    let magic = r.read_u32()?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic {
            path: path.display().to_string(),
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = r.read_u32()? as usize;
    let rows = r.read_u32()? as usize;
    let cols = r.read_u32()? as usize;
    let dim = rows * cols;
    let payload = r.take(count * dim)?;
    r.finish()?;
    let scale = 1.0 / 255.0;
    let data: Vec<S> = payload
        .iter()
        .map(|&b| S::from_f64_lossy(b as f64 * scale))
        .collect();
    let images = Matrix::from_vec(count, dim, data).expect("length checked above");
    Ok((count, images))
}

fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<usize>, DataError> {
    let mut r = BeReader::new(path, bytes);
    let magic = r.read_u32()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic {
            path: path.display().to_string(),
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let count = r.read_u32()? as usize;
    let payload = r.take(count)?;
    r.finish()?;
    Ok(payload.iter().map(|&b| b as usize).collect())
}

/// Loads an images/labels IDX pair into a dataset with pixels scaled to
/// `[0, 1]` by `1/255`.
pub fn load_idx<S: Scalar>(images_path: &Path, labels_path: &Path) -> Result<Dataset<S>> {
    let image_bytes = read_file_bytes(images_path)?;
    let (count, images) = parse_images::<S>(images_path, &image_bytes)?;
    let label_bytes = read_file_bytes(labels_path)?;
    let labels = parse_labels(labels_path, &label_bytes)?;
    if count != labels.len() {
        return Err(DataError::CountMismatch {
            images: count,
            labels: labels.len(),
        }
        .into());
    }
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    Ok(Dataset {
        name: images_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "idx".into()),
        images,
        labels,
        classes: classes.max(2),
    })
}

/// Serializes images into IDX bytes; test fixture for round-trip checks and
/// synthetic corpora.
pub fn write_idx_images(images: &[Vec<u8>], rows: usize, cols: usize) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), rows * cols);
        out.extend_from_slice(img);
    }
    out
}

/// Serializes labels into IDX bytes.
pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

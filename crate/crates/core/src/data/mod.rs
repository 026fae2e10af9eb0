//! Dataset ingestion, label embedding, positive/negative sample synthesis,
//! and synthetic fixtures.

mod cifar;
mod idx;

pub use cifar::{load_cifar10, CIFAR_CLASSES, CIFAR_PIXELS, CIFAR_RECORD_BYTES};
pub use idx::{load_idx, write_idx_images, write_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};

use crate::error::{Error, Result};
use crate::num::{Matrix, Rng, Scalar};

/// Flattened inputs with integer class labels. Immutable after construction
/// and freely shareable across threads.
#[derive(Clone, Debug)]
pub struct Dataset<S> {
    pub name: String,
    /// `num_samples x input_dim`, scalars in `[0, 1]`.
    pub images: Matrix<S>,
    /// Class indices in `[0, classes)`.
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl<S: Scalar> Dataset<S> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.images.cols()
    }

    /// Keeps only the first `n` samples; convenience for desk-scale runs.
    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            let idx: Vec<usize> = (0..n).collect();
            self.images = self.images.gather_rows(&idx);
            self.labels.truncate(n);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.rows() != self.labels.len() {
            return Err(Error::Data(crate::error::DataError::CountMismatch {
                images: self.images.rows(),
                labels: self.labels.len(),
            }));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::ClassOutOfRange {
                class: bad,
                classes: self.classes,
            });
        }
        Ok(())
    }
}

/// Copies the row and overwrites its first `classes` entries with the
/// one-hot of `class_index`; the rest of the row is untouched.
pub fn embed_label_border<S: Scalar>(
    image_row: &[S],
    class_index: usize,
    classes: usize,
) -> Result<Vec<S>> {
    if class_index >= classes {
        return Err(Error::ClassOutOfRange {
            class: class_index,
            classes,
        });
    }
    if classes > image_row.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot embed {classes} classes into a {}-pixel row",
            image_row.len()
        )));
    }
    let mut out = image_row.to_vec();
    for v in &mut out[..classes] {
        *v = S::zero();
    }
    out[class_index] = S::one();
    Ok(out)
}

/// Batch form of [`embed_label_border`], one class per row.
pub fn embed_label_border_batch<S: Scalar>(
    images: &Matrix<S>,
    class_per_row: &[usize],
    classes: usize,
) -> Result<Matrix<S>> {
    assert_eq!(images.rows(), class_per_row.len());
    if classes > images.cols() {
        return Err(Error::InvalidConfig(format!(
            "cannot embed {classes} classes into {}-pixel rows",
            images.cols()
        )));
    }
    let mut out = images.clone();
    for (r, &class) in class_per_row.iter().enumerate() {
        if class >= classes {
            return Err(Error::ClassOutOfRange { class, classes });
        }
        let row = out.row_mut(r);
        for v in &mut row[..classes] {
            *v = S::zero();
        }
        row[class] = S::one();
    }
    Ok(out)
}

/// One-hot rows for a batch of class indices.
pub fn one_hot_batch<S: Scalar>(class_per_row: &[usize], classes: usize) -> Matrix<S> {
    let mut m = Matrix::zeros(class_per_row.len(), classes);
    for (r, &c) in class_per_row.iter().enumerate() {
        m.set(r, c, S::one());
    }
    m
}

/// A batch's positive/negative training companions: one-hot label pairs and,
/// when `embed_images` is set (the baseline variant), border-embedded inputs.
#[derive(Clone, Debug)]
pub struct PosNeg<S> {
    pub l_pos: Matrix<S>,
    pub l_neg: Matrix<S>,
    pub neg_classes: Vec<usize>,
    pub x_pos: Option<Matrix<S>>,
    pub x_neg: Option<Matrix<S>>,
}

/// Builds positive one-hots from the true labels and negative one-hots from
/// classes drawn uniformly over the non-true classes.
pub fn make_pos_neg<S: Scalar>(
    images: &Matrix<S>,
    labels: &[usize],
    classes: usize,
    rng: &mut Rng,
    embed_images: bool,
) -> Result<PosNeg<S>> {
    if classes < 2 {
        return Err(Error::InvalidConfig(
            "negative sampling needs at least 2 classes".into(),
        ));
    }
    assert_eq!(images.rows(), labels.len());
    let neg_classes: Vec<usize> = labels
        .iter()
        .map(|&l| rng.choose_excluding(classes, l))
        .collect();
    let l_pos = one_hot_batch(labels, classes);
    let l_neg = one_hot_batch(&neg_classes, classes);
    let (x_pos, x_neg) = if embed_images {
        (
            Some(embed_label_border_batch(images, labels, classes)?),
            Some(embed_label_border_batch(images, &neg_classes, classes)?),
        )
    } else {
        (None, None)
    };
    Ok(PosNeg {
        l_pos,
        l_neg,
        neg_classes,
        x_pos,
        x_neg,
    })
}

/// Standard deviation of each synthetic cluster; `separation` is expressed
/// in multiples of this.
pub const BLOB_SIGMA: f64 = 0.05;

/// Gaussian clusters clipped to `[0, 1]`. Class centers sit `separation`
/// sigmas from a common base point along distinct random directions, so
/// `separation = 0` makes the classes indistinguishable.
pub fn synthetic_blobs<S: Scalar>(
    n_per_class: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    rng: &mut Rng,
) -> Dataset<S> {
    assert!(n_per_class > 0 && classes > 0 && dim > 0);
    let base: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.35, 0.65)).collect();
    let mut centers = Vec::with_capacity(classes);
    for _ in 0..classes {
        let dir: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let center: Vec<f64> = base
            .iter()
            .zip(&dir)
            .map(|(b, d)| b + d / norm * separation * BLOB_SIGMA)
            .collect();
        centers.push(center);
    }
    let total = n_per_class * classes;
    let mut data = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            for &mu in center {
                let v = (mu + BLOB_SIGMA * rng.standard_normal()).clamp(0.0, 1.0);
                data.push(S::from_f64_lossy(v));
            }
            labels.push(c);
        }
    }
    Dataset {
        name: "blobs".into(),
        images: Matrix::from_vec(total, dim, data).expect("counted"),
        labels,
        classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_writes_one_hot_prefix() {
        let row = vec![0.5f64; 16];
        let out = embed_label_border(&row, 1, 10).unwrap();
        assert_eq!(&out[..10], &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(out[10..].iter().all(|&v| v == 0.5));
    }

    #[test]
    fn embed_does_not_modify_source() {
        let row = vec![0.25f64; 12];
        let before = row.clone();
        let _ = embed_label_border(&row, 3, 10).unwrap();
        assert_eq!(row, before);
    }

    #[test]
    fn embed_twice_equals_embedding_once_with_second_class() {
        let row = vec![0.7f64; 16];
        let once = embed_label_border(&row, 9, 10).unwrap();
        let twice = embed_label_border(&embed_label_border(&row, 2, 10).unwrap(), 9, 10).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn embed_rejects_out_of_range_class() {
        let row = vec![0.0f64; 16];
        assert!(matches!(
            embed_label_border(&row, 10, 10),
            Err(Error::ClassOutOfRange { class: 10, classes: 10 })
        ));
    }

    #[test]
    fn two_class_negative_is_forced_complement() {
        let mut rng = Rng::seed_from_u64(1);
        let images = Matrix::<f64>::zeros(64, 8);
        let labels = vec![0usize; 64];
        let pn = make_pos_neg(&images, &labels, 2, &mut rng, false).unwrap();
        assert!(pn.neg_classes.iter().all(|&c| c == 1));
    }

    #[test]
    fn negative_draws_are_uniform_over_wrong_classes() {
        // 1e5 draws with true class 3 of 10; each wrong class frequency must
        // sit within 3-sigma binomial bounds around 1/9.
        let mut rng = Rng::seed_from_u64(2);
        let n = 100_000usize;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[rng.choose_excluding(10, 3)] += 1;
        }
        assert_eq!(counts[3], 0);
        for (c, &k) in counts.iter().enumerate() {
            if c == 3 {
                continue;
            }
            let f = k as f64 / n as f64;
            assert!((0.105..=0.117).contains(&f), "class {c} frequency {f}");
        }
    }

    #[test]
    fn negative_never_equals_positive() {
        let mut rng = Rng::seed_from_u64(3);
        for i in 0..1_000_000usize {
            let truth = i % 10;
            assert_ne!(rng.choose_excluding(10, truth), truth);
        }
    }

    #[test]
    fn blobs_are_deterministic_and_in_range() {
        let a: Dataset<f64> =
            synthetic_blobs(20, 3, 8, 6.0, &mut Rng::seed_from_u64(11));
        let b: Dataset<f64> =
            synthetic_blobs(20, 3, 8, 6.0, &mut Rng::seed_from_u64(11));
        assert!(a.images.bit_eq(&b.images));
        assert_eq!(a.labels, b.labels);
        assert!(a.images.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        a.validate().unwrap();
    }

    #[test]
    fn zero_separation_centers_coincide() {
        let ds: Dataset<f64> = synthetic_blobs(50, 2, 4, 0.0, &mut Rng::seed_from_u64(12));
        // per-class means of every coordinate agree within sampling noise
        let mean = |class: usize, col: usize| {
            let mut acc = 0.0;
            let mut n = 0;
            for (r, &l) in ds.labels.iter().enumerate() {
                if l == class {
                    acc += ds.images.get(r, col);
                    n += 1;
                }
            }
            acc / n as f64
        };
        for col in 0..4 {
            assert!((mean(0, col) - mean(1, col)).abs() < 0.05);
        }
    }
}

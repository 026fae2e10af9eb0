//! Real-file checks, guarded on dataset availability: when the MNIST IDX
//! files are present (scripts/fetch_mnist.sh, or FFCL_DATA_DIR), the parsed
//! training set must have exactly 60,000 samples with the published
//! per-class counts.

use ffcl_core::{load_idx, Dataset};
use std::path::PathBuf;

const MNIST_TRAIN_PER_CLASS: [usize; 10] =
    [5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949];

fn data_dir() -> PathBuf {
    std::env::var("FFCL_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
        })
}

fn find(base: &str) -> Option<PathBuf> {
    let dir = data_dir();
    [dir.join(base), dir.join(format!("{base}.gz"))]
        .into_iter()
        .find(|candidate| candidate.exists())
}

#[test]
fn mnist_training_set_counts_match_published_figures() {
    let (Some(images), Some(labels)) = (
        find("train-images-idx3-ubyte"),
        find("train-labels-idx1-ubyte"),
    ) else {
        eprintln!(
            "SKIP: MNIST files not found under {} (scripts/fetch_mnist.sh)",
            data_dir().display()
        );
        return;
    };
    let ds: Dataset<f32> = load_idx(&images, &labels).unwrap();
    assert_eq!(ds.len(), 60_000);
    assert_eq!(ds.input_dim(), 784);
    assert_eq!(ds.classes, 10);
    let mut counts = [0usize; 10];
    for &l in &ds.labels {
        counts[l] += 1;
    }
    assert_eq!(counts, MNIST_TRAIN_PER_CLASS);
    assert!(ds.images.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

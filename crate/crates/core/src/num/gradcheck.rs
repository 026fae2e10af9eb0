//! Central-difference gradient oracle.
//!
//! Lives in the library (not test code) because the layer-gradient acceptance
//! checks and external harnesses both drive it, but it is never called from
//! any training path: the analytic gradients it validates stay independent.

use super::matrix::Matrix;
use super::scalar::Scalar;

/// Per-entry central differences `(f(x + h e) - f(x - h e)) / 2h`.
pub fn finite_diff_grad<S: Scalar>(
    mut f: impl FnMut(&Matrix<S>) -> S,
    x: &Matrix<S>,
    h: S,
) -> Matrix<S> {
    assert!(h > S::zero(), "finite_diff_grad requires h > 0");
    let two_h = h + h;
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.data().len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - h;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (plus - minus) / two_h;
    }
    grad
}

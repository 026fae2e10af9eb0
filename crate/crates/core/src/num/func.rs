//! Scalar nonlinearities with overflow-safe evaluation.

use super::scalar::Scalar;

/// Logistic function `1 / (1 + e^-x)`, branching on the sign of `x` so the
/// exponential argument is never positive.
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// `log(1 + e^x)` in the stable form `max(x, 0) + ln(1 + e^-|x|)`.
pub fn softplus<S: Scalar>(x: S) -> S {
    x.max(S::zero()) + (-x.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_symmetry_point() {
        assert_eq!(sigmoid(0.0f64), 0.5);
    }

    #[test]
    fn sigmoid_reference_value() {
        // direct high-precision evaluation of 1 / (1 + e^2)
        assert!((sigmoid(-2.0f64) - 0.11920292202211755).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_pair_sums_to_one() {
        for &x in &[0.3f64, 1.7, 12.0, 700.0, 1e-9] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_survives_extreme_arguments() {
        assert!(sigmoid(1e6f64) <= 1.0);
        assert!(sigmoid(-1e6f64) >= 0.0);
        assert!(sigmoid(1e6f64).is_finite());
        assert!(sigmoid(-1e6f64).is_finite());
    }

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0f64) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((softplus(50.0f64) - 50.0).abs() < 1e-9);
        assert!(softplus(-200.0f64) >= 0.0);
    }

    #[test]
    fn softplus_shift_identity() {
        // softplus(x) - softplus(-x) == x
        for &x in &[0.0f64, 0.5, -3.25, 17.0, -40.0] {
            assert!((softplus(x) - softplus(-x) - x).abs() < 1e-12);
        }
    }
}

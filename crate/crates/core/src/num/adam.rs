//! Adam optimizer with the standard bias-corrected moment recurrence.

use super::matrix::Matrix;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Optimizer hyperparameters, kept in `f64` so configuration is independent
/// of the compute precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.03,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-tensor optimizer state; `m` and `v` always mirror the tracked
/// parameter's shape and `t` advances by exactly one per applied step.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    m: Matrix<S>,
    v: Matrix<S>,
    t: u64,
    lr: S,
    beta1: S,
    beta2: S,
    eps: S,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(rows: usize, cols: usize, cfg: &AdamConfig) -> Self {
        AdamState {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            t: 0,
            lr: S::from_f64_lossy(cfg.lr),
            beta1: S::from_f64_lossy(cfg.beta1),
            beta2: S::from_f64_lossy(cfg.beta2),
            eps: S::from_f64_lossy(cfg.eps),
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }
    pub fn m(&self) -> &Matrix<S> {
        &self.m
    }
    pub fn v(&self) -> &Matrix<S> {
        &self.v
    }

    /// Restores persisted moment buffers (checkpoint loading).
    pub fn restore(&mut self, m: Matrix<S>, v: Matrix<S>, t: u64) -> Result<()> {
        if m.shape() != self.m.shape() || v.shape() != self.v.shape() {
            return Err(Error::DimMismatch {
                op: "adam_restore",
                lhs_rows: self.m.rows(),
                lhs_cols: self.m.cols(),
                rhs_rows: m.rows(),
                rhs_cols: m.cols(),
            });
        }
        self.m = m;
        self.v = v;
        self.t = t;
        Ok(())
    }
}

/// Advances `param` by one Adam step for `grad`, updating `state` in place.
pub fn adam_step<S: Scalar>(
    param: &mut Matrix<S>,
    grad: &Matrix<S>,
    state: &mut AdamState<S>,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.m.shape() {
        return Err(Error::DimMismatch {
            op: "adam_step",
            lhs_rows: param.rows(),
            lhs_cols: param.cols(),
            rhs_rows: grad.rows(),
            rhs_cols: grad.cols(),
        });
    }
    state.t += 1;
    let one = S::one();
    let b1 = state.beta1;
    let b2 = state.beta2;
    let bc1 = one - b1.powi(state.t as i32);
    let bc2 = one - b2.powi(state.t as i32);
    let lr = state.lr;
    let eps = state.eps;

    let p = param.data_mut();
    let g = grad.data();
    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for i in 0..p.len() {
        m[i] = b1 * m[i] + (one - b1) * g[i];
        v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

//! Deterministic dense linear algebra, nonlinearities, the Adam optimizer,
//! seeded randomness, and the finite-difference oracle.

mod adam;
mod func;
mod gradcheck;
mod matrix;
mod rng;
mod scalar;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use func::{sigmoid, softplus};
pub use gradcheck::finite_diff_grad;
pub use matrix::Matrix;
pub use rng::Rng;
pub use scalar::Scalar;

//! Numeric substrate: matrices, deterministic RNG, Adam, gradient checking.
//!
//! Everything here is plain safe f64 code with no platform-dependent paths,
//! so a seeded run produces bit-identical numbers everywhere.

pub mod adam;
pub mod gradcheck;
pub mod matrix;
pub mod rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{central_diff, check_gradient, relative_error};
pub use matrix::{
    affine_backward, affine_forward, matmul, matmul_a_bt, matmul_at_b, relu, relu_backward,
    sigmoid, Matrix,
};
pub use rng::{derive_seed, splitmix64, Rng};

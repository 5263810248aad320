//! Learned proxies for the quantum Wasserstein distance of order 1.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod features;
pub mod linalg;
pub mod models;
pub mod quantum;
pub mod rng;
pub mod validation;

pub use error::{Error, Result};
pub use rng::{derive_seed, SeededRandomSource};

pub type Complex64 = nalgebra::Complex<f64>;

//! Conditional-GAN regression for tabular data.
//!
//! A generator learns the conditional distribution of a target given its
//! covariates by playing against a discriminator that scores (x, y) pairs;
//! point predictions are the median of generator samples. The crate also
//! carries the baselines it is compared against (an MSE-trained network of the
//! same shape and an exact RBF Gaussian process), the synthetic and real
//! dataset pipelines, metrics, and the experiment harness that produces the
//! comparison tables.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod datasets;
pub mod matrix;
pub mod rng;

pub use matrix::Matrix;
pub mod models;
pub mod gp;
pub mod eval;
pub mod training;
pub mod harness;

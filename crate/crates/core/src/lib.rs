//! Inference of robot-to-obstacle distances from raw 2D laser scans.
//!
//! The crate is organised bottom-up:
//!
//! - [`neuralcore`]: differentiable 1D kernels (convolution, transposed
//!   convolution, batch normalization, activations, gamma output scaling)
//!   with hand-written backward passes and a finite-difference checker.
//! - [`model`]: the fully convolutional encoder/decoder with skip
//!   connections, its checkpoint format and chunked wide-scan inference.
//! - [`optim`]: RMSLE / MSE losses and the Adam optimizer.
//! - [`simulator`]: a 2.5D prism world with an analytic raycaster that
//!   produces paired laser and ground-truth obstacle scans.
//! - [`dataset`]: ground-truth fusion, normalization, augmentation and
//!   dataset file formats.
//! - [`trainer`]: training loop, evaluation and the ablation harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod binio;
pub mod dataset;
pub mod error;
pub mod model;
pub mod neuralcore;
pub mod optim;
pub mod simulator;
pub mod trainer;

pub use error::{Error, Result};

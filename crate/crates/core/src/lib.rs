//! Numerical core for scene recognition with superpixels and a two-layer
//! deep Boltzmann machine.
//!
//! The pipeline is:
//!
//! 1. [`slic`] reduces an RGB image to a fixed-size luminance grid using SLIC
//!    superpixels computed in CIELAB space ([`color`]).
//! 2. [`dbm`] learns a two-hidden-layer Boltzmann machine greedily, one
//!    [`rbm`] at a time, and extracts top-layer features by mean-field
//!    inference.
//! 3. [`softmax`] classifies the features with L2-regularized multinomial
//!    logistic regression.
//!
//! Every probabilistic quantity can be checked by exhaustive enumeration on
//! small models ([`rbm::brute_force_partition`], [`dbm::brute_force_partition`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, datasets and the
//! command line live in the `scenedbm` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod color;
pub mod dbm;
mod error;
pub mod image;
pub mod matrix;
pub mod rbm;
pub mod slic;
pub mod softmax;

pub(crate) mod math;

pub use error::{Error, Result};
pub use matrix::Matrix;

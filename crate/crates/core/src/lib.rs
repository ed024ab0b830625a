// SPDX-License-Identifier: MIT OR Apache-2.0

//! Active-learning engine for binary change detection.
//!
//! Each round the oracle labels a small display of patch pairs, a logistic
//! scorer is retrained on everything labeled so far, and the next display
//! is chosen. The learned strategy synthesizes virtual exemplars that are
//! representative of the data, diverse, and ambiguous for the current
//! scorer, then shows the nearest real unlabeled samples.

pub mod dataset;
pub mod display;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod rng;
pub mod samplers;
pub mod scorer;
pub mod session;

pub use error::{Error, Result};

//! Infrared small-target segmentation toolkit.
//!
//! Pieces, bottom-up:
//!
//! - [`raster`]: grayscale images, probability maps and binary masks, with
//!   binary PGM input/output.
//! - [`ccl`]: connected-component labelling with per-component statistics.
//! - [`eedm`]: edge-enhanced, difficulty-mining loss and its gradient.
//! - [`fusion`]: multi-scale inference through a pluggable [`fusion::Predictor`].
//! - [`sensitivity`]: dual-threshold post-processing that keeps faint targets.
//! - [`metrics`]: IoU, probability of detection, false-alarm rate, score and
//!   ROC sweeps.
//! - [`synth`]: seeded synthetic scenes with ground truth.
//! - [`toymodel`]: a tiny logistic segmenter to exercise the loss end to end.
//!
//! Every capability has a runnable example under `examples/`, e.g.
//! `cargo run --release --example eedm_loss`.

pub mod ccl;
pub mod commands;
pub mod config;
pub mod eedm;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod raster;
pub mod sensitivity;
pub mod synth;
pub mod toymodel;

pub use error::{Error, Result};
pub use raster::{BinaryMask, GrayImage, ProbMask};

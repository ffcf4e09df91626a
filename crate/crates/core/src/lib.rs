//! Estimation of, and inference on, a single change point in the mean of a
//! high-dimensional time series via plug-in least squares.
//!
//! The pipeline separates nuisance estimation from the change-point search:
//! segment means are soft-thresholded and BIC-tuned, then plugged into the
//! squared loss, whose argmin over splits is refined in exactly two steps
//! ([`changepoint::algorithm1`]). Confidence intervals come from the two
//! limiting laws of the estimator — a Brownian-motion argmax when the jump
//! size vanishes and a two-sided random-walk argmax when it does not
//! ([`limitdist`], [`inference`]). [`datagen`] supplies the synthetic
//! designs used by the simulation harness.

pub mod changepoint;
pub mod datagen;
pub mod error;
pub mod inference;
pub mod limitdist;
pub mod mean_estimation;
pub mod model;
pub mod seeding;

pub use error::{Error, Result};
pub use model::{GainProfile, JumpSummary, MeanPair, SeriesMatrix};

//! Ranking-similarity regularization for deep imbalanced regression.
//!
//! The regularizer encourages, for every sample in a batch subset, the
//! ranking of its neighbors by feature-space similarity to match the
//! ranking of its neighbors by label-space similarity. Ranking is made
//! trainable by a blackbox backward pass: the gradient of a continuous
//! interpolation obtained from one extra ranking of a perturbed input.
//!
//! The crate also ships the surrounding experiment machinery: a minimal
//! manual-backprop regressor with Adam, standard imbalanced-learning
//! baselines (inverse-frequency re-weighting, label distribution smoothing,
//! focal regression scaling, two-stage retraining), a seeded synthetic
//! benchmark generator, per-shot-region evaluation metrics, and a
//! config-driven runner with sweep aggregation.
//!
//! Data-parallel inner loops (pairwise matrices, per-row backward passes,
//! multi-run sweeps) run on rayon when the default `parallel` feature is
//! enabled and fall back to sequential code without it. Results are
//! identical either way.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod parallel;
pub mod ranking;
pub mod regularizer;
pub mod similarity;

pub use error::{Error, Result};
pub use ranking::{rank, rank_backward, InterpolationConfig, RankVector};
pub use regularizer::{
    ranksim_backward, ranksim_loss, ranksim_loss_and_backward, sample_unique_labels, BatchSubset,
    RankSimConfig,
};
pub use similarity::{FeatureSimilarityKind, PenaltyKind};

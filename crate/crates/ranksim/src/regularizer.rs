//! The ranking-similarity regularizer: batch subsampling, the two pairwise
//! similarity matrices, row-wise ranking, the penalty sum, and the backward
//! pass into per-feature gradients.
//!
//! The loss over a subset of M items is the sum over rows `i` of
//! `penalty(rank(label-sim row i), rank(feature-sim row i))`, with the rank
//! vectors normalized by the subset size M. The normalization keeps the
//! penalty scale and the backward perturbation `lambda * dL/d(rank)`
//! independent of M, so one `(gamma, lambda)` setting works across batch
//! sizes; without it the perturbation saturates the bounded similarity
//! range and the regularizer gradient swamps the task gradient. Labels are
//! constant data, so no gradient flows into the label branch. The balancing
//! weight `gamma` is applied by the caller when composing losses; this
//! module is gamma-free.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::ranking::{rank, rank_backward_reusing, InterpolationConfig, RankVector};
use crate::similarity::{
    feature_similarity_grad, pairwise_feature_matrix, pairwise_label_matrix, penalty_grad_on,
    penalty_on, FeatureSimilarityKind, PenaltyKind, SimilarityMatrix,
};

/// Hyperparameters of the regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankSimConfig {
    /// Balancing weight on the regularization term, applied by the caller.
    pub gamma: f64,
    /// Interpolation strength of the blackbox backward pass.
    pub lambda: f64,
    pub penalty: PenaltyKind,
    pub feature_sim: FeatureSimilarityKind,
    /// Subsample the batch so each label occurs at most once.
    pub unique_label_sampling: bool,
}

impl Default for RankSimConfig {
    fn default() -> Self {
        Self {
            gamma: 100.0,
            lambda: 2.0,
            penalty: PenaltyKind::Mse,
            feature_sim: FeatureSimilarityKind::Cosine,
            unique_label_sampling: true,
        }
    }
}

impl RankSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        InterpolationConfig::new(self.lambda)?;
        self.penalty.validate()
    }

    fn interpolation(&self) -> InterpolationConfig {
        InterpolationConfig::new(self.lambda).expect("validated lambda")
    }
}

/// The items the regularizer operates on: positions within the source batch,
/// their labels, and their feature vectors.
#[derive(Debug, Clone)]
pub struct BatchSubset {
    pub indices: Vec<usize>,
    pub labels: Vec<f64>,
    pub features: Vec<Vec<f64>>,
}

impl BatchSubset {
    pub fn new(indices: Vec<usize>, labels: Vec<f64>, features: Vec<Vec<f64>>) -> Result<Self> {
        if indices.len() != labels.len() || labels.len() != features.len() {
            return Err(Error::LengthMismatch {
                context: "batch subset",
                left: indices.len(),
                right: labels.len().max(features.len()),
            });
        }
        Ok(Self {
            indices,
            labels,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Gather a subset of a batch by position.
    pub fn gather(positions: &[usize], labels: &[f64], features: &[Vec<f64>]) -> Self {
        Self {
            indices: positions.to_vec(),
            labels: positions.iter().map(|&p| labels[p]).collect(),
            features: positions.iter().map(|&p| features[p].clone()).collect(),
        }
    }
}

/// Pick one position per distinct label value, uniformly at random among its
/// occurrences, preserving first-occurrence order. An empty batch yields an
/// empty selection.
pub fn sample_unique_labels<R: Rng + ?Sized>(labels: &[f64], rng: &mut R) -> Vec<usize> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for (i, &y) in labels.iter().enumerate() {
        match seen.get(&y.to_bits()) {
            Some(&g) => groups[g].push(i),
            None => {
                seen.insert(y.to_bits(), groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
        .iter()
        .map(|occurrences| occurrences[rng.gen_range(0..occurrences.len())])
        .collect()
}

/// Loss value plus the degenerate-batch flag (fewer than 2 items).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSimLoss {
    pub value: f64,
    pub degenerate: bool,
}

/// Forward pass output with everything the backward pass reuses.
struct Forward {
    loss: f64,
    /// Size-normalized label rank rows (rank / M).
    label_ranks_norm: Vec<Vec<f64>>,
    /// Integer feature rank rows, reused by the backward pass.
    feature_ranks: Vec<RankVector>,
    feature_ranks_norm: Vec<Vec<f64>>,
    feature_matrix: SimilarityMatrix,
}

fn normalize(ranks: &RankVector) -> Vec<f64> {
    let m = ranks.len() as f64;
    ranks.as_slice().iter().map(|&r| f64::from(r) / m).collect()
}

fn forward(subset: &BatchSubset, cfg: &RankSimConfig) -> Result<Forward> {
    let m = subset.len();
    let label_matrix = pairwise_label_matrix(&subset.labels)?;
    let feature_matrix = pairwise_feature_matrix(&subset.features, cfg.feature_sim)?;

    let label_ranks = parallel::map_indices(m, |i| rank(label_matrix.row(i)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let feature_ranks = parallel::map_indices(m, |i| rank(feature_matrix.row(i)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let label_ranks_norm: Vec<Vec<f64>> = label_ranks.iter().map(normalize).collect();
    let feature_ranks_norm: Vec<Vec<f64>> = feature_ranks.iter().map(normalize).collect();

    let mut loss = 0.0;
    for i in 0..m {
        loss += penalty_on(&label_ranks_norm[i], &feature_ranks_norm[i], cfg.penalty);
    }
    Ok(Forward {
        loss,
        label_ranks_norm,
        feature_ranks,
        feature_ranks_norm,
        feature_matrix,
    })
}

/// Regularization loss over a subset (raw sum over rows, not scaled by gamma).
pub fn ranksim_loss(subset: &BatchSubset, cfg: &RankSimConfig) -> Result<RankSimLoss> {
    cfg.validate()?;
    if subset.len() < 2 {
        return Ok(RankSimLoss {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(RankSimLoss {
        value: forward(subset, cfg)?.loss,
        degenerate: false,
    })
}

/// Loss together with gradients with respect to each feature vector.
#[derive(Debug, Clone)]
pub struct RankSimOutput {
    pub loss: f64,
    pub degenerate: bool,
    /// One gradient per subset item, unscaled by gamma.
    pub feature_grads: Vec<Vec<f64>>,
}

fn backward(subset: &BatchSubset, cfg: &RankSimConfig, fwd: &Forward) -> Result<Vec<Vec<f64>>> {
    let m = subset.len();
    let interp = cfg.interpolation();

    // Per-row gradient into the feature-similarity matrix; rows independent.
    // One extra rank call per row, on the perturbed row. The incoming
    // gradient is with respect to the normalized ranks, so the integer
    // rank difference is scaled by 1/M.
    let matrix_grad = parallel::map_indices(m, |i| -> Result<Vec<f64>> {
        let incoming = penalty_grad_on(
            &fwd.label_ranks_norm[i],
            &fwd.feature_ranks_norm[i],
            cfg.penalty,
        );
        let diff = rank_backward_reusing(
            &fwd.feature_ranks[i],
            fwd.feature_matrix.row(i),
            &incoming,
            interp,
        )?;
        Ok(diff.into_iter().map(|g| g / m as f64).collect())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    // Chain through the similarity into both features of each pair. Each
    // target index accumulates its own contributions in a fixed order, so
    // the result is identical between the parallel and sequential paths.
    let grads = parallel::map_indices(m, |k| -> Result<Vec<f64>> {
        let dim = subset.features[k].len();
        let mut g = vec![0.0; dim];
        for i in 0..m {
            let w = matrix_grad[i][k];
            if w != 0.0 {
                let (_, g2) =
                    feature_similarity_grad(&subset.features[i], &subset.features[k], cfg.feature_sim)?;
                for (acc, x) in g.iter_mut().zip(&g2) {
                    *acc += w * x;
                }
            }
        }
        for j in 0..m {
            let w = matrix_grad[k][j];
            if w != 0.0 {
                let (g1, _) =
                    feature_similarity_grad(&subset.features[k], &subset.features[j], cfg.feature_sim)?;
                for (acc, x) in g.iter_mut().zip(&g1) {
                    *acc += w * x;
                }
            }
        }
        Ok(g)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(grads)
}

/// Gradients of [`ranksim_loss`] with respect to each feature vector in the
/// subset, unscaled by gamma. Labels contribute no gradient.
pub fn ranksim_backward(subset: &BatchSubset, cfg: &RankSimConfig) -> Result<Vec<Vec<f64>>> {
    Ok(ranksim_loss_and_backward(subset, cfg)?.feature_grads)
}

/// Loss and feature gradients in one pass, sharing the forward ranking work.
pub fn ranksim_loss_and_backward(
    subset: &BatchSubset,
    cfg: &RankSimConfig,
) -> Result<RankSimOutput> {
    cfg.validate()?;
    if subset.len() < 2 {
        return Ok(RankSimOutput {
            loss: 0.0,
            degenerate: true,
            feature_grads: subset.features.iter().map(|z| vec![0.0; z.len()]).collect(),
        });
    }
    let fwd = forward(subset, cfg)?;
    let feature_grads = backward(subset, cfg, &fwd)?;
    Ok(RankSimOutput {
        loss: fwd.loss,
        degenerate: false,
        feature_grads,
    })
}

//! Label-space and feature-space similarity functions, rank-vector penalty
//! functions, and their analytic gradients.
//!
//! Labels compare by negative absolute distance. Feature vectors compare by
//! one of five interchangeable similarities (cosine, correlation, negative
//! MSE/MAE/L-inf). Rank vectors are penalized by one of five functions
//! (MSE, MAE, Huber, cosine distance, L-inf). Gradients use deterministic
//! subgradient conventions: `sign(0) = 0`, and L-inf assigns its gradient
//! to the first maximizing coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::ranking::RankVector;

/// Which space a similarity matrix was built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Label,
    Feature,
}

/// Pairwise similarities over a batch subset; square and symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    dim: usize,
    entries: Vec<f64>,
    space: Space,
}

impl SimilarityMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }
}

/// Feature-space similarity choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSimilarityKind {
    #[default]
    Cosine,
    Correlation,
    NegativeMse,
    NegativeMae,
    NegativeLinf,
}

fn default_huber_delta() -> f64 {
    1.0
}

/// Rank-vector penalty choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    Mse,
    Mae,
    Huber {
        #[serde(default = "default_huber_delta")]
        delta: f64,
    },
    CosineDistance,
    Linf,
}

impl Default for PenaltyKind {
    fn default() -> Self {
        PenaltyKind::Mse
    }
}

impl PenaltyKind {
    /// Huber with the default `delta = 1.0`.
    pub fn huber() -> Self {
        PenaltyKind::Huber {
            delta: default_huber_delta(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let PenaltyKind::Huber { delta } = self {
            if !(delta.is_finite() && *delta > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "huber delta must be positive, got {delta}"
                )));
            }
        }
        Ok(())
    }
}

/// Negative absolute distance between two scalar labels.
pub fn label_similarity(y_i: f64, y_j: f64) -> Result<f64> {
    if !y_i.is_finite() || !y_j.is_finite() {
        return Err(Error::NonFinite {
            context: "label similarity",
        });
    }
    Ok(-(y_i - y_j).abs())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_dims(z1: &[f64], z2: &[f64], context: &'static str) -> Result<()> {
    if z1.len() != z2.len() {
        return Err(Error::LengthMismatch {
            context,
            left: z1.len(),
            right: z2.len(),
        });
    }
    if z1.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(())
}

fn centered(z: &[f64]) -> Vec<f64> {
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    z.iter().map(|&x| x - mean).collect()
}

fn cosine(z1: &[f64], z2: &[f64], kind: &'static str) -> Result<f64> {
    let (n1, n2) = (norm(z1), norm(z2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::DegenerateVector { kind });
    }
    Ok(dot(z1, z2) / (n1 * n2))
}

/// Similarity of two feature vectors under the selected function.
pub fn feature_similarity(z1: &[f64], z2: &[f64], kind: FeatureSimilarityKind) -> Result<f64> {
    check_dims(z1, z2, "feature similarity")?;
    let d = z1.len() as f64;
    match kind {
        FeatureSimilarityKind::Cosine => cosine(z1, z2, "cosine similarity"),
        FeatureSimilarityKind::Correlation => {
            cosine(&centered(z1), &centered(z2), "correlation similarity")
        }
        FeatureSimilarityKind::NegativeMse => Ok(-z1
            .iter()
            .zip(z2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / d),
        FeatureSimilarityKind::NegativeMae => {
            Ok(-z1.iter().zip(z2).map(|(a, b)| (a - b).abs()).sum::<f64>() / d)
        }
        FeatureSimilarityKind::NegativeLinf => Ok(-z1
            .iter()
            .zip(z2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)),
    }
}

fn cosine_grads(z1: &[f64], z2: &[f64], kind: &'static str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n1, n2) = (norm(z1), norm(z2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::DegenerateVector { kind });
    }
    let d = dot(z1, z2);
    let g1 = z1
        .iter()
        .zip(z2)
        .map(|(&a, &b)| (b - d / (n1 * n1) * a) / (n1 * n2))
        .collect();
    let g2 = z1
        .iter()
        .zip(z2)
        .map(|(&a, &b)| (a - d / (n2 * n2) * b) / (n1 * n2))
        .collect();
    Ok((g1, g2))
}

/// Index of the first coordinate maximizing `|z1[k] - z2[k]|`.
fn first_linf_index(z1: &[f64], z2: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = (z1[0] - z2[0]).abs();
    for k in 1..z1.len() {
        let v = (z1[k] - z2[k]).abs();
        if v > best_val {
            best = k;
            best_val = v;
        }
    }
    best
}

/// Partial derivatives of [`feature_similarity`] with respect to both inputs.
pub fn feature_similarity_grad(
    z1: &[f64],
    z2: &[f64],
    kind: FeatureSimilarityKind,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(z1, z2, "feature similarity")?;
    let d = z1.len() as f64;
    match kind {
        FeatureSimilarityKind::Cosine => cosine_grads(z1, z2, "cosine similarity"),
        FeatureSimilarityKind::Correlation => {
            let (u, v) = (centered(z1), centered(z2));
            let (gu, gv) = cosine_grads(&u, &v, "correlation similarity")?;
            // chain through centering: g - mean(g)
            let project = |g: Vec<f64>| {
                let mean = g.iter().sum::<f64>() / d;
                g.into_iter().map(|x| x - mean).collect::<Vec<f64>>()
            };
            Ok((project(gu), project(gv)))
        }
        FeatureSimilarityKind::NegativeMse => {
            let g1: Vec<f64> = z1
                .iter()
                .zip(z2)
                .map(|(&a, &b)| -2.0 / d * (a - b))
                .collect();
            let g2 = g1.iter().map(|&x| -x).collect();
            Ok((g1, g2))
        }
        FeatureSimilarityKind::NegativeMae => {
            let g1: Vec<f64> = z1
                .iter()
                .zip(z2)
                .map(|(&a, &b)| -sign(a - b) / d)
                .collect();
            let g2 = g1.iter().map(|&x| -x).collect();
            Ok((g1, g2))
        }
        FeatureSimilarityKind::NegativeLinf => {
            let k = first_linf_index(z1, z2);
            let mut g1 = vec![0.0; z1.len()];
            let mut g2 = vec![0.0; z1.len()];
            g1[k] = -sign(z1[k] - z2[k]);
            g2[k] = sign(z1[k] - z2[k]);
            Ok((g1, g2))
        }
    }
}

fn check_penalty_inputs(rk_a: &RankVector, rk_b: &RankVector, kind: PenaltyKind) -> Result<()> {
    kind.validate()?;
    if rk_a.len() != rk_b.len() {
        return Err(Error::LengthMismatch {
            context: "penalty",
            left: rk_a.len(),
            right: rk_b.len(),
        });
    }
    Ok(())
}

/// Penalty between two rank vectors; zero iff equal for MSE/MAE/Huber/L-inf.
pub fn penalty(rk_a: &RankVector, rk_b: &RankVector, kind: PenaltyKind) -> Result<f64> {
    check_penalty_inputs(rk_a, rk_b, kind)?;
    Ok(penalty_on(&rk_a.to_f64(), &rk_b.to_f64(), kind))
}

/// Gradient of [`penalty`] with respect to the second rank vector, which is
/// treated as real-valued.
pub fn penalty_grad(rk_a: &RankVector, rk_b: &RankVector, kind: PenaltyKind) -> Result<Vec<f64>> {
    check_penalty_inputs(rk_a, rk_b, kind)?;
    Ok(penalty_grad_on(&rk_a.to_f64(), &rk_b.to_f64(), kind))
}

/// [`penalty`] over real-valued rank representations (lengths must already
/// agree). The regularizer uses this on size-normalized ranks.
pub fn penalty_on(a: &[f64], b: &[f64], kind: PenaltyKind) -> f64 {
    let m = a.len() as f64;
    let diffs = a.iter().zip(b).map(|(&x, &y)| x - y);
    match kind {
        PenaltyKind::Mse => diffs.map(|d| d * d).sum::<f64>() / m,
        PenaltyKind::Mae => diffs.map(f64::abs).sum::<f64>() / m,
        PenaltyKind::Huber { delta } => {
            diffs
                .map(|d| {
                    if d.abs() < delta {
                        0.5 * d * d
                    } else {
                        delta * (d.abs() - 0.5 * delta)
                    }
                })
                .sum::<f64>()
                / m
        }
        PenaltyKind::CosineDistance => 1.0 - dot(a, b) / (norm(a) * norm(b)),
        PenaltyKind::Linf => diffs.map(f64::abs).fold(0.0, f64::max),
    }
}

/// Gradient of [`penalty_on`] with respect to `b`.
pub fn penalty_grad_on(a: &[f64], b: &[f64], kind: PenaltyKind) -> Vec<f64> {
    let m = a.len() as f64;
    match kind {
        PenaltyKind::Mse => a.iter().zip(b).map(|(&x, &y)| 2.0 / m * (y - x)).collect(),
        PenaltyKind::Mae => a.iter().zip(b).map(|(&x, &y)| sign(y - x) / m).collect(),
        PenaltyKind::Huber { delta } => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = y - x;
                if d.abs() < delta {
                    d / m
                } else {
                    delta * sign(d) / m
                }
            })
            .collect(),
        PenaltyKind::CosineDistance => {
            let (na, nb) = (norm(a), norm(b));
            let d = dot(a, b);
            a.iter()
                .zip(b)
                .map(|(&x, &y)| -(x - d / (nb * nb) * y) / (na * nb))
                .collect()
        }
        PenaltyKind::Linf => {
            let k = first_linf_index(a, b);
            let mut g = vec![0.0; a.len()];
            g[k] = sign(b[k] - a[k]);
            g
        }
    }
}

fn assemble_matrix(
    m: usize,
    space: Space,
    rows: Vec<Result<Vec<f64>>>,
) -> Result<SimilarityMatrix> {
    let mut entries = Vec::with_capacity(m * m);
    for row in rows {
        entries.extend(row?);
    }
    Ok(SimilarityMatrix {
        dim: m,
        entries,
        space,
    })
}

/// Pairwise label-similarity matrix (negative absolute distance).
pub fn pairwise_label_matrix(labels: &[f64]) -> Result<SimilarityMatrix> {
    let m = labels.len();
    if m < 2 {
        return Err(Error::InvalidConfig(format!(
            "pairwise matrix requires at least 2 items, got {m}"
        )));
    }
    let rows = parallel::map_indices(m, |i| {
        (0..m)
            .map(|j| {
                label_similarity(labels[i], labels[j]).map_err(|e| Error::PairEvaluation {
                    i,
                    j,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<f64>>>()
    });
    assemble_matrix(m, Space::Label, rows)
}

/// Pairwise feature-similarity matrix under the selected function.
pub fn pairwise_feature_matrix(
    features: &[Vec<f64>],
    kind: FeatureSimilarityKind,
) -> Result<SimilarityMatrix> {
    let m = features.len();
    if m < 2 {
        return Err(Error::InvalidConfig(format!(
            "pairwise matrix requires at least 2 items, got {m}"
        )));
    }
    let rows = parallel::map_indices(m, |i| {
        (0..m)
            .map(|j| {
                feature_similarity(&features[i], &features[j], kind).map_err(|e| {
                    Error::PairEvaluation {
                        i,
                        j,
                        source: Box::new(e),
                    }
                })
            })
            .collect::<Result<Vec<f64>>>()
    });
    assemble_matrix(m, Space::Feature, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central finite difference of `f` at `x`, coordinate `k`.
    fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[k] += h;
        minus[k] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    }

    fn assert_grad_matches(analytic: &[f64], f: &dyn Fn(&[f64]) -> f64, x: &[f64], tol: f64) {
        for k in 0..x.len() {
            let fd = central_diff(f, x, k, 1e-6);
            let denom = fd.abs().max(1.0);
            assert!(
                (analytic[k] - fd).abs() / denom < tol,
                "coord {k}: analytic {} vs fd {fd}",
                analytic[k]
            );
        }
    }

    #[test]
    fn label_similarity_examples() {
        assert_eq!(label_similarity(21.0, 25.0).unwrap(), -4.0);
        assert_eq!(label_similarity(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(label_similarity(70.0, 1.0).unwrap(), -69.0);
        assert!(label_similarity(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn feature_similarity_examples() {
        let cos = FeatureSimilarityKind::Cosine;
        assert_eq!(feature_similarity(&[1.0, 0.0], &[1.0, 0.0], cos).unwrap(), 1.0);
        assert_eq!(feature_similarity(&[1.0, 0.0], &[0.0, 1.0], cos).unwrap(), 0.0);
        assert_eq!(
            feature_similarity(&[1.0, 2.0], &[3.0, 2.0], FeatureSimilarityKind::NegativeMse)
                .unwrap(),
            -2.0
        );
    }

    #[test]
    fn zero_norm_is_degenerate() {
        let err = feature_similarity(&[0.0, 0.0], &[1.0, 0.0], FeatureSimilarityKind::Cosine);
        assert!(matches!(err, Err(Error::DegenerateVector { .. })));
        // constant vector is degenerate under correlation
        let err = feature_similarity(&[2.0, 2.0], &[1.0, 0.0], FeatureSimilarityKind::Correlation);
        assert!(matches!(err, Err(Error::DegenerateVector { .. })));
    }

    #[test]
    fn cosine_grad_orthogonal_example() {
        let (g1, _) =
            feature_similarity_grad(&[1.0, 0.0], &[0.0, 1.0], FeatureSimilarityKind::Cosine)
                .unwrap();
        assert!((g1[0] - 0.0).abs() < 1e-12);
        assert!((g1[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_mse_grad_at_equal_points_is_zero() {
        let z = [0.3, -0.7, 1.1];
        let (g1, g2) =
            feature_similarity_grad(&z, &z, FeatureSimilarityKind::NegativeMse).unwrap();
        assert!(g1.iter().all(|&x| x == 0.0));
        assert!(g2.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn differentiable_similarity_grads_match_finite_differences() {
        let kinds = [
            FeatureSimilarityKind::Cosine,
            FeatureSimilarityKind::Correlation,
            FeatureSimilarityKind::NegativeMse,
            FeatureSimilarityKind::NegativeMae,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in kinds {
            for _ in 0..100 {
                let d = rng.gen_range(2..8);
                let z1: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let z2: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                // MAE kinks sit where coordinates coincide; random draws avoid them
                let (g1, g2) = feature_similarity_grad(&z1, &z2, kind).unwrap();
                let z2c = z2.clone();
                let f1 = move |x: &[f64]| feature_similarity(x, &z2c, kind).unwrap();
                assert_grad_matches(&g1, &f1, &z1, 1e-5);
                let z1c = z1.clone();
                let f2 = move |x: &[f64]| feature_similarity(&z1c, x, kind).unwrap();
                assert_grad_matches(&g2, &f2, &z2, 1e-5);
            }
        }
    }

    fn rk(v: &[u32]) -> RankVector {
        RankVector::from_ranks(v.to_vec()).unwrap()
    }

    #[test]
    fn penalty_examples() {
        let a = rk(&[2, 4, 1, 3]);
        assert_eq!(penalty(&a, &a, PenaltyKind::Mse).unwrap(), 0.0);
        assert_eq!(
            penalty(&rk(&[1, 2]), &rk(&[2, 1]), PenaltyKind::Mse).unwrap(),
            1.0
        );
        assert_eq!(
            penalty(&rk(&[1, 4, 2, 3]), &rk(&[4, 1, 2, 3]), PenaltyKind::Linf).unwrap(),
            3.0
        );
        assert!(penalty(&rk(&[1, 2]), &rk(&[1, 2, 3]), PenaltyKind::Mse).is_err());
    }

    #[test]
    fn penalty_grad_examples() {
        let a = rk(&[3, 1, 2]);
        let zero = penalty_grad(&a, &a, PenaltyKind::Mse).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        let g = penalty_grad(&rk(&[1, 2]), &rk(&[2, 1]), PenaltyKind::Mse).unwrap();
        assert_eq!(g, vec![1.0, -1.0]);
    }

    #[test]
    fn huber_and_cosine_penalty_grads_match_finite_differences() {
        // FD oracle over real-valued relaxations of the rank vectors,
        // sampled away from the |diff| = delta kinks.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for kind in [
            PenaltyKind::huber(),
            PenaltyKind::Mse,
            PenaltyKind::CosineDistance,
        ] {
            for _ in 0..50 {
                let m = rng.gen_range(3..9);
                let a: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0..m as f64)).collect();
                let b: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0..m as f64)).collect();
                if matches!(kind, PenaltyKind::Huber { delta } if a
                    .iter()
                    .zip(&b)
                    .any(|(&x, &y)| ((x - y).abs() - delta).abs() < 1e-4))
                {
                    continue;
                }
                let analytic = penalty_grad_real(&a, &b, kind);
                let ac = a.clone();
                let f = move |x: &[f64]| penalty_real(&ac, x, kind);
                assert_grad_matches(&analytic, &f, &b, 1e-5);
            }
        }
    }

    /// Real-valued twins of penalty/penalty_grad used only by the FD oracle.
    fn penalty_real(a: &[f64], b: &[f64], kind: PenaltyKind) -> f64 {
        let m = a.len() as f64;
        let diffs = a.iter().zip(b).map(|(&x, &y)| x - y);
        match kind {
            PenaltyKind::Mse => diffs.map(|d| d * d).sum::<f64>() / m,
            PenaltyKind::Mae => diffs.map(f64::abs).sum::<f64>() / m,
            PenaltyKind::Huber { delta } => {
                diffs
                    .map(|d| {
                        if d.abs() < delta {
                            0.5 * d * d
                        } else {
                            delta * (d.abs() - 0.5 * delta)
                        }
                    })
                    .sum::<f64>()
                    / m
            }
            PenaltyKind::CosineDistance => 1.0 - dot(a, b) / (norm(a) * norm(b)),
            PenaltyKind::Linf => diffs.map(f64::abs).fold(0.0, f64::max),
        }
    }

    fn penalty_grad_real(a: &[f64], b: &[f64], kind: PenaltyKind) -> Vec<f64> {
        let m = a.len() as f64;
        match kind {
            PenaltyKind::Mse => a.iter().zip(b).map(|(&x, &y)| 2.0 / m * (y - x)).collect(),
            PenaltyKind::Mae => a.iter().zip(b).map(|(&x, &y)| sign(y - x) / m).collect(),
            PenaltyKind::Huber { delta } => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| {
                    let d = y - x;
                    if d.abs() < delta {
                        d / m
                    } else {
                        delta * sign(d) / m
                    }
                })
                .collect(),
            PenaltyKind::CosineDistance => {
                let (na, nb) = (norm(a), norm(b));
                let dp = dot(a, b);
                a.iter()
                    .zip(b)
                    .map(|(&x, &y)| -(x - dp / (nb * nb) * y) / (na * nb))
                    .collect()
            }
            PenaltyKind::Linf => {
                let k = first_linf_index(a, b);
                let mut g = vec![0.0; a.len()];
                g[k] = sign(b[k] - a[k]);
                g
            }
        }
    }

    #[test]
    fn label_matrix_anchor_row() {
        let m = pairwise_label_matrix(&[1.0, 21.0, 25.0, 70.0]).unwrap();
        assert_eq!(m.row(1), &[-20.0, 0.0, -4.0, -49.0]);
        let ranks = crate::ranking::rank(m.row(1)).unwrap();
        assert_eq!(ranks.as_slice(), &[3, 1, 2, 4]);
    }

    #[test]
    fn identical_features_give_all_ones_cosine_matrix() {
        let z = vec![vec![0.6, 0.8], vec![0.6, 0.8], vec![0.6, 0.8]];
        let m = pairwise_feature_matrix(&z, FeatureSimilarityKind::Cosine).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pairwise_error_carries_indices() {
        let z = vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]];
        let err = pairwise_feature_matrix(&z, FeatureSimilarityKind::Cosine).unwrap_err();
        match err {
            Error::PairEvaluation { i, j, .. } => {
                assert!(i == 1 || j == 1, "offending index missing: ({i}, {j})");
            }
            other => panic!("expected PairEvaluation, got {other}"),
        }
    }

    proptest! {
        #[test]
        fn every_similarity_is_symmetric(
            z1 in proptest::collection::vec(-5.0f64..5.0, 4),
            z2 in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            for kind in [
                FeatureSimilarityKind::Cosine,
                FeatureSimilarityKind::Correlation,
                FeatureSimilarityKind::NegativeMse,
                FeatureSimilarityKind::NegativeMae,
                FeatureSimilarityKind::NegativeLinf,
            ] {
                let ab = feature_similarity(&z1, &z2, kind);
                let ba = feature_similarity(&z2, &z1, kind);
                match (ab, ba) {
                    (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "asymmetric error behavior"),
                }
            }
        }

        #[test]
        fn pairwise_matrix_is_symmetric(
            labels in proptest::collection::vec(-50.0f64..50.0, 2..10),
        ) {
            let m = pairwise_label_matrix(&labels).unwrap();
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    prop_assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn cosine_is_scale_invariant_and_correlation_also_shift_invariant(
            z1 in proptest::collection::vec(0.1f64..5.0, 4),
            z2 in proptest::collection::vec(0.1f64..5.0, 4),
            c in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let scaled: Vec<f64> = z1.iter().map(|&x| c * x).collect();
            let cos = feature_similarity(&z1, &z2, FeatureSimilarityKind::Cosine).unwrap();
            let cos_scaled = feature_similarity(&scaled, &z2, FeatureSimilarityKind::Cosine).unwrap();
            prop_assert!((cos - cos_scaled).abs() < 1e-10);

            let shifted: Vec<f64> = z1.iter().map(|&x| c * x + shift).collect();
            let corr = feature_similarity(&z1, &z2, FeatureSimilarityKind::Correlation);
            let corr_shifted = feature_similarity(&shifted, &z2, FeatureSimilarityKind::Correlation);
            if let (Ok(a), Ok(b)) = (corr, corr_shifted) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn penalties_are_nonnegative_and_zero_iff_equal(
            ranks in proptest::collection::vec(1u32..6, 2..6),
        ) {
            let n = ranks.len() as u32;
            let clipped: Vec<u32> = ranks.iter().map(|&r| r.min(n)).collect();
            let a = RankVector::from_ranks(clipped.clone()).unwrap();
            let b = RankVector::from_ranks(clipped).unwrap();
            for kind in [PenaltyKind::Mse, PenaltyKind::Mae, PenaltyKind::huber(), PenaltyKind::Linf] {
                prop_assert_eq!(penalty(&a, &b, kind).unwrap(), 0.0);
            }
        }
    }
}

//! Competition ranking and its blackbox backward pass.
//!
//! The forward operator assigns each element the rank `1 + (number of
//! strictly larger elements)`, so rank 1 is the largest element and ties
//! share the smaller rank. Ranking is piecewise constant, so its true
//! gradient is zero almost everywhere; the backward pass instead returns
//! the gradient of a continuous interpolation controlled by a strength
//! `lambda`, obtained from one extra ranking of a perturbed input.

use crate::error::{Error, Result};

#[cfg(test)]
thread_local! {
    /// Counts `rank` invocations on the current thread. Test-only hook used
    /// to pin the call budget of the regularizer's backward pass.
    pub(crate) static RANK_CALLS: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

/// Integer competition ranks of a real vector, rank 1 = largest element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankVector {
    ranks: Vec<u32>,
}

impl RankVector {
    /// Wrap raw ranks, checking that every entry lies in `1..=len`.
    pub fn from_ranks(ranks: Vec<u32>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptyVector);
        }
        let n = ranks.len() as u32;
        if ranks.iter().any(|&r| r < 1 || r > n) {
            return Err(Error::InvalidConfig(format!(
                "rank entries must lie in 1..={n}"
            )));
        }
        Ok(Self { ranks })
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.ranks
    }

    /// Ranks cast to `f64`, the representation penalties operate on.
    pub fn to_f64(&self) -> Vec<f64> {
        self.ranks.iter().map(|&r| f64::from(r)).collect()
    }
}

/// Interpolation strength for the blackbox backward pass.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InterpolationConfig {
    lambda: f64,
}

impl InterpolationConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Competition ranks of `a`: entry `i` is `1 + |{j : a[j] > a[i]}|`.
///
/// Sort-based with a tie-aware second pass; ties share the smaller rank.
pub fn rank(a: &[f64]) -> Result<RankVector> {
    #[cfg(test)]
    RANK_CALLS.with(|c| c.set(c.get() + 1));

    if a.is_empty() {
        return Err(Error::EmptyVector);
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context: "rank" });
    }

    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_unstable_by(|&i, &j| a[j].partial_cmp(&a[i]).expect("finite"));

    let mut ranks = vec![0u32; a.len()];
    let mut current = 1u32;
    for (pos, &idx) in order.iter().enumerate() {
        if pos > 0 && a[idx] < a[order[pos - 1]] {
            current = pos as u32 + 1;
        }
        ranks[idx] = current;
    }
    Ok(RankVector { ranks })
}

/// Fractional (mid) ranks: tie groups receive the mean of the positions
/// they occupy, rank 1 = largest. This is the convention correlation
/// statistics need; the regularizer uses competition ranks instead.
pub fn fractional_rank(a: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::EmptyVector);
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context: "rank" });
    }

    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_unstable_by(|&i, &j| a[j].partial_cmp(&a[i]).expect("finite"));

    let mut ranks = vec![0.0; a.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && a[order[end]] == a[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) hold this tie group
        let mid = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mid;
        }
        start = end;
    }
    Ok(ranks)
}

/// Blackbox gradient through `rank`: `-(rank(a) - rank(a + lambda*g)) / lambda`.
///
/// `incoming_grad` is the loss gradient with respect to the rank vector.
/// Costs two calls to `rank`; use [`rank_backward_reusing`] when the
/// forward ranks are already available.
pub fn rank_backward(
    a: &[f64],
    incoming_grad: &[f64],
    cfg: InterpolationConfig,
) -> Result<Vec<f64>> {
    let forward = rank(a)?;
    rank_backward_reusing(&forward, a, incoming_grad, cfg)
}

/// Same as [`rank_backward`] but reuses a precomputed `rank(a)`, so only the
/// perturbed input is ranked (the one extra call the method costs).
pub fn rank_backward_reusing(
    forward: &RankVector,
    a: &[f64],
    incoming_grad: &[f64],
    cfg: InterpolationConfig,
) -> Result<Vec<f64>> {
    if incoming_grad.len() != a.len() {
        return Err(Error::GradientShapeMismatch {
            expected: a.len(),
            actual: incoming_grad.len(),
        });
    }
    if forward.len() != a.len() {
        return Err(Error::GradientShapeMismatch {
            expected: a.len(),
            actual: forward.len(),
        });
    }
    let lambda = cfg.lambda();
    let perturbed: Vec<f64> = a
        .iter()
        .zip(incoming_grad)
        .map(|(&x, &g)| x + lambda * g)
        .collect();
    let perturbed_ranks = rank(&perturbed)?;

    Ok(forward
        .as_slice()
        .iter()
        .zip(perturbed_ranks.as_slice())
        .map(|(&r, &rp)| -(f64::from(r) - f64::from(rp)) / lambda)
        .collect())
}

#[cfg(test)]
pub(crate) fn rank_call_count() -> u64 {
    RANK_CALLS.with(|c| c.get())
}

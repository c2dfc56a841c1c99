//! Conventional imbalanced-learning techniques the regularizer combines
//! with: label binning, label distribution smoothing, inverse-frequency
//! re-weighting, regression focal scaling, and the two-stage retraining
//! plan.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical label density over equal-width bins, with an optional smoothed
/// version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedLabelDensity {
    /// Bin boundaries, length = bins + 1. Bins are right-open; the last bin
    /// is right-closed.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub smoothed: Option<Vec<f64>>,
}

impl BinnedLabelDensity {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin index for a label inside the covered range.
    pub fn bin_index(&self, y: f64) -> usize {
        let idx = ((y - self.bin_edges[0]) / self.bin_width()).floor() as i64;
        idx.clamp(0, self.n_bins() as i64 - 1) as usize
    }
}

/// Histogram of labels over bins of `bin_width` spanning the label range.
pub fn bin_labels(labels: &[f64], bin_width: f64) -> Result<BinnedLabelDensity> {
    if labels.is_empty() {
        return Err(Error::EmptyVector);
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite { context: "labels" });
    }
    let lo = labels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n_bins = ((hi - lo) / bin_width).floor() as usize + 1;
    let bin_edges: Vec<f64> = (0..=n_bins).map(|k| lo + k as f64 * bin_width).collect();
    let mut counts = vec![0u64; n_bins];
    for &y in labels {
        let idx = (((y - lo) / bin_width).floor() as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Ok(BinnedLabelDensity {
        bin_edges,
        counts,
        smoothed: None,
    })
}

/// Symmetric Gaussian smoothing kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdsKernel {
    /// Number of taps; must be odd.
    pub size: usize,
    pub sigma: f64,
}

impl Default for LdsKernel {
    fn default() -> Self {
        Self { size: 5, sigma: 2.0 }
    }
}

impl LdsKernel {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || self.size % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "kernel size must be odd and positive, got {}",
                self.size
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kernel sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Normalized tap weights, symmetric around the center.
    pub fn weights(&self) -> Vec<f64> {
        let center = (self.size / 2) as f64;
        let raw: Vec<f64> = (0..self.size)
            .map(|k| (-((k as f64 - center).powi(2)) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / sum).collect()
    }
}

/// Convolve the counts with the kernel. Taps falling outside the range are
/// dropped and the surviving weights renormalized per position; the result
/// is then rescaled once so total mass matches the input counts.
pub fn lds_smooth(density: &BinnedLabelDensity, kernel: &LdsKernel) -> Result<BinnedLabelDensity> {
    kernel.validate()?;
    let w = kernel.weights();
    let half = kernel.size as i64 / 2;
    let b = density.n_bins() as i64;
    let mut smoothed = vec![0.0; density.n_bins()];
    for pos in 0..b {
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            let src = pos + k as i64 - half;
            if src >= 0 && src < b {
                acc += wk * density.counts[src as usize] as f64;
                norm += wk;
            }
        }
        smoothed[pos as usize] = acc / norm;
    }
    let mass: f64 = smoothed.iter().sum();
    let target = density.total() as f64;
    if mass > 0.0 {
        let scale = target / mass;
        for v in &mut smoothed {
            *v *= scale;
        }
    }
    Ok(BinnedLabelDensity {
        bin_edges: density.bin_edges.clone(),
        counts: density.counts.clone(),
        smoothed: Some(smoothed),
    })
}

/// Inverse-frequency style per-bin re-weighting schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReweightScheme {
    #[default]
    None,
    Inv,
    Sqinv,
}

/// Per-bin loss weights, normalized so the mean weight over training samples
/// is 1. Bins with no samples and no effective density get weight 0.
pub fn reweight(
    density: &BinnedLabelDensity,
    scheme: ReweightScheme,
    use_smoothed: bool,
) -> Result<Vec<f64>> {
    let n = density.n_bins();
    if scheme == ReweightScheme::None {
        return Ok(vec![1.0; n]);
    }
    let effective: Vec<f64> = if use_smoothed {
        density
            .smoothed
            .clone()
            .ok_or_else(|| Error::InvalidConfig("smoothed density not computed".into()))?
    } else {
        density.counts.iter().map(|&c| c as f64).collect()
    };
    let mut raw = vec![0.0; n];
    for bin in 0..n {
        if effective[bin] > 0.0 {
            raw[bin] = match scheme {
                ReweightScheme::Inv => 1.0 / effective[bin],
                ReweightScheme::Sqinv => 1.0 / effective[bin].sqrt(),
                ReweightScheme::None => unreachable!(),
            };
        } else if density.counts[bin] > 0 {
            return Err(Error::EmptyBinWeight { bin });
        }
    }
    let n_samples: f64 = density.total() as f64;
    let weighted_sum: f64 = density
        .counts
        .iter()
        .zip(&raw)
        .map(|(&c, &w)| c as f64 * w)
        .sum();
    if weighted_sum == 0.0 {
        return Err(Error::InvalidConfig(
            "cannot normalize weights: no occupied bins".into(),
        ));
    }
    let scale = n_samples / weighted_sum;
    Ok(raw.into_iter().map(|w| w * scale).collect())
}

/// Map per-bin weights onto individual samples.
pub fn sample_weights(density: &BinnedLabelDensity, bin_weights: &[f64], labels: &[f64]) -> Vec<f64> {
    labels
        .iter()
        .map(|&y| bin_weights[density.bin_index(y)])
        .collect()
}

/// Focal scaling for regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FocalRConfig {
    pub beta: f64,
    pub gamma_exp: f64,
}

impl Default for FocalRConfig {
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma_exp: 1.0,
        }
    }
}

impl FocalRConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0)
            || !(self.gamma_exp.is_finite() && self.gamma_exp > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "focal beta and gamma must be positive, got {} and {}",
                self.beta, self.gamma_exp
            )));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-sample scale factors `sigmoid(beta * |e|)^gamma`, treated as
/// constants (no gradient flows through the factor).
pub fn focal_r_weights(errors: &[f64], cfg: &FocalRConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if errors.iter().any(|&e| !(e.is_finite() && e >= 0.0)) {
        return Err(Error::InvalidConfig(
            "focal errors must be nonnegative".into(),
        ));
    }
    Ok(errors
        .iter()
        .map(|&e| sigmoid(cfg.beta * e).powf(cfg.gamma_exp))
        .collect())
}

/// Two-stage retraining plan: full training first, then a frozen-backbone
/// head retrain with inverse re-weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrtSchedule {
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
}

/// What the trainer does during one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StagePlan {
    pub epochs: usize,
    /// Freeze everything except the output head.
    pub head_only: bool,
    pub reweight: ReweightScheme,
    /// Regularizer is active only in the representation-learning stage.
    pub apply_ranksim: bool,
}

impl RrtSchedule {
    pub fn new(stage1_epochs: usize, stage2_epochs: usize) -> Self {
        Self {
            stage1_epochs,
            stage2_epochs,
        }
    }

    pub fn stages(&self, ranksim_enabled: bool) -> [StagePlan; 2] {
        [
            StagePlan {
                epochs: self.stage1_epochs,
                head_only: false,
                reweight: ReweightScheme::None,
                apply_ranksim: ranksim_enabled,
            },
            StagePlan {
                epochs: self.stage2_epochs,
                head_only: true,
                reweight: ReweightScheme::Inv,
                apply_ranksim: false,
            },
        ]
    }
}

/// Write a density table (and optional weights) as CSV.
pub fn export_density_csv(
    path: &std::path::Path,
    density: &BinnedLabelDensity,
    weights: Option<&[f64]>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["bin_left", "bin_right", "count", "smoothed", "weight"])?;
    for bin in 0..density.n_bins() {
        let smoothed = density
            .smoothed
            .as_ref()
            .map_or(String::new(), |s| s[bin].to_string());
        let weight = weights.map_or(String::new(), |w| w[bin].to_string());
        writer.write_record([
            density.bin_edges[bin].to_string(),
            density.bin_edges[bin + 1].to_string(),
            density.counts[bin].to_string(),
            smoothed,
            weight,
        ])?;
    }
    writer.flush()?;
    Ok(())
}

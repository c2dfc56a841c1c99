//! Evaluation metrics (MAE, MSE, GM, Pearson, Spearman), per-shot-region
//! reports, and averaged ranking matrices over label-sorted test batches.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::ShotRegion;
use crate::error::{Error, Result};
use crate::parallel;
use crate::ranking::{fractional_rank, rank};
use crate::similarity::{pairwise_feature_matrix, pairwise_label_matrix, FeatureSimilarityKind};

/// Geometric-mean floor: absolute errors are clamped to at least this value
/// because the plain product form is undefined at zero error.
pub const DEFAULT_GM_FLOOR: f64 = 1e-6;

fn check_paired(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            context: "metric inputs",
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(())
}

pub fn mae(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_paired(predictions, targets)?;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / predictions.len() as f64)
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_paired(predictions, targets)?;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / predictions.len() as f64)
}

/// Geometric mean of absolute errors, computed in the log domain with the
/// given floor on each error.
pub fn gm_with_floor(predictions: &[f64], targets: &[f64], floor: f64) -> Result<f64> {
    check_paired(predictions, targets)?;
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gm floor must be positive, got {floor}"
        )));
    }
    let log_sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs().max(floor).ln())
        .sum();
    Ok((log_sum / predictions.len() as f64).exp())
}

pub fn gm(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    gm_with_floor(predictions, targets, DEFAULT_GM_FLOOR)
}

pub fn pearson(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_paired(predictions, targets)?;
    let n = predictions.len() as f64;
    if predictions.len() < 2 {
        return Err(Error::DegenerateCorrelation);
    }
    let mean_p = predictions.iter().sum::<f64>() / n;
    let mean_t = targets.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_t = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        let dp = p - mean_p;
        let dt = t - mean_t;
        cov += dp * dt;
        var_p += dp * dp;
        var_t += dt * dt;
    }
    if var_p == 0.0 || var_t == 0.0 {
        return Err(Error::DegenerateCorrelation);
    }
    Ok(cov / (var_p.sqrt() * var_t.sqrt()))
}

/// Pearson correlation of fractional rank vectors.
pub fn spearman(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_paired(predictions, targets)?;
    let rp = fractional_rank(predictions)?;
    let rt = fractional_rank(targets)?;
    pearson(&rp, &rt)
}

/// Metrics over one sample subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub count: usize,
    pub mae: f64,
    pub mse: f64,
    pub gm: f64,
    /// Absent when the subset is degenerate (fewer than 2 samples or zero
    /// variance).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pearson: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spearman: Option<f64>,
}

fn region_metrics(predictions: &[f64], targets: &[f64]) -> Result<RegionMetrics> {
    Ok(RegionMetrics {
        count: predictions.len(),
        mae: mae(predictions, targets)?,
        mse: mse(predictions, targets)?,
        gm: gm(predictions, targets)?,
        pearson: pearson(predictions, targets).ok(),
        spearman: spearman(predictions, targets).ok(),
    })
}

/// Per-region metric report. `all` covers the union of samples; regions
/// without samples are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub all: RegionMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub many: Option<RegionMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub medium: Option<RegionMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub few: Option<RegionMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero: Option<RegionMetrics>,
}

impl MetricReport {
    pub fn region(&self, region: ShotRegion) -> Option<&RegionMetrics> {
        match region {
            ShotRegion::Many => self.many.as_ref(),
            ShotRegion::Medium => self.medium.as_ref(),
            ShotRegion::Few => self.few.as_ref(),
            ShotRegion::Zero => self.zero.as_ref(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// One CSV row per present region.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["region", "count", "mae", "mse", "gm", "pearson", "spearman"])?;
        let mut write = |name: &str, m: &RegionMetrics| -> Result<()> {
            writer.write_record([
                name.to_string(),
                m.count.to_string(),
                m.mae.to_string(),
                m.mse.to_string(),
                m.gm.to_string(),
                m.pearson.map_or(String::new(), |v| v.to_string()),
                m.spearman.map_or(String::new(), |v| v.to_string()),
            ])?;
            Ok(())
        };
        write("all", &self.all)?;
        for (name, metrics) in [
            ("many", &self.many),
            ("medium", &self.medium),
            ("few", &self.few),
            ("zero", &self.zero),
        ] {
            if let Some(m) = metrics {
                write(name, m)?;
            }
        }
        writer.flush()?;
        Ok(())
    }
}

/// Metrics over the whole set and per shot region. `regions[i]` is the
/// region of sample `i`.
pub fn report(
    predictions: &[f64],
    targets: &[f64],
    regions: &[ShotRegion],
) -> Result<MetricReport> {
    check_paired(predictions, targets)?;
    if regions.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            context: "region assignment",
            left: regions.len(),
            right: predictions.len(),
        });
    }
    let subset = |want: ShotRegion| -> Result<Option<RegionMetrics>> {
        let mut p = Vec::new();
        let mut t = Vec::new();
        for i in 0..predictions.len() {
            if regions[i] == want {
                p.push(predictions[i]);
                t.push(targets[i]);
            }
        }
        if p.is_empty() {
            Ok(None)
        } else {
            region_metrics(&p, &t).map(Some)
        }
    };
    Ok(MetricReport {
        all: region_metrics(predictions, targets)?,
        many: subset(ShotRegion::Many)?,
        medium: subset(ShotRegion::Medium)?,
        few: subset(ShotRegion::Few)?,
        zero: subset(ShotRegion::Zero)?,
    })
}

/// Entrywise averages of row-ranked similarity matrices over test batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgRankingMatrices {
    pub batch_size: usize,
    pub batch_count: usize,
    pub label_matrix: Vec<Vec<f64>>,
    pub feature_matrix: Vec<Vec<f64>>,
}

impl AvgRankingMatrices {
    /// Write one matrix as a headerless CSV grid.
    fn save_grid(matrix: &[Vec<f64>], path: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for row in matrix {
            writer.write_record(row.iter().map(|v| v.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, label_path: &Path, feature_path: &Path) -> Result<()> {
        Self::save_grid(&self.label_matrix, label_path)?;
        Self::save_grid(&self.feature_matrix, feature_path)
    }
}

/// Row-rank each batch's label and feature similarity matrices and average
/// entrywise across batches. Every batch must have the same size and be
/// pre-sorted by label.
pub fn average_ranking_matrices(
    label_batches: &[Vec<f64>],
    feature_batches: &[Vec<Vec<f64>>],
    kind: FeatureSimilarityKind,
) -> Result<AvgRankingMatrices> {
    if label_batches.len() != feature_batches.len() {
        return Err(Error::LengthMismatch {
            context: "ranking matrix batches",
            left: label_batches.len(),
            right: feature_batches.len(),
        });
    }
    if label_batches.is_empty() {
        return Err(Error::EmptyVector);
    }
    let b = label_batches[0].len();
    for (labels, features) in label_batches.iter().zip(feature_batches) {
        if labels.len() != b || features.len() != b {
            return Err(Error::DimensionMismatch(format!(
                "ragged batch: expected size {b}, got {} labels / {} features",
                labels.len(),
                features.len()
            )));
        }
        if labels.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig("batch is not sorted by label".into()));
        }
    }
    if b < 2 {
        return Err(Error::InvalidConfig(
            "ranking matrices need batches of at least 2".into(),
        ));
    }

    // (label rank rows, feature rank rows) per batch
    let per_batch = parallel::map_indices(label_batches.len(), |bi| -> Result<_> {
        let sy = pairwise_label_matrix(&label_batches[bi])?;
        let sz = pairwise_feature_matrix(&feature_batches[bi], kind)?;
        let mut label_rows = Vec::with_capacity(b);
        let mut feature_rows = Vec::with_capacity(b);
        for i in 0..b {
            label_rows.push(rank(sy.row(i))?.to_f64());
            feature_rows.push(rank(sz.row(i))?.to_f64());
        }
        Ok((label_rows, feature_rows))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut label_matrix = vec![vec![0.0; b]; b];
    let mut feature_matrix = vec![vec![0.0; b]; b];
    for (label_rows, feature_rows) in &per_batch {
        for i in 0..b {
            for j in 0..b {
                label_matrix[i][j] += label_rows[i][j];
                feature_matrix[i][j] += feature_rows[i][j];
            }
        }
    }
    let count = per_batch.len() as f64;
    for i in 0..b {
        for j in 0..b {
            label_matrix[i][j] /= count;
            feature_matrix[i][j] /= count;
        }
    }
    Ok(AvgRankingMatrices {
        batch_size: b,
        batch_count: per_batch.len(),
        label_matrix,
        feature_matrix,
    })
}

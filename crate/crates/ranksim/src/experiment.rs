//! Config-driven experiment runner: wires the dataset, baselines, model,
//! and regularizer into reproducible training runs, plus a sweep helper
//! that aggregates many runs into one table.
//!
//! Reproducibility contract: a run is a pure function of its config. Three
//! independent seeded streams (init, shuffling, subset sampling) are derived
//! from the seed, so enabling the regularizer with `gamma = 0` leaves the
//! vanilla trajectory bit-identical.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    bin_labels, export_density_csv, focal_r_weights, lds_smooth, reweight, sample_weights,
    FocalRConfig, LdsKernel, ReweightScheme, RrtSchedule, StagePlan,
};
use crate::dataset::{generate, load, ImbalancedDataset, SkewSpec};
use crate::error::{Error, Result};
use crate::metrics::{average_ranking_matrices, mae, report, AvgRankingMatrices, MetricReport};
use crate::model::{
    regression_loss, Checkpoint, Matrix, NetConfig, RegressionLossKind, RegressorNet, Upstream,
};
use crate::optim::{AdamConfig, AdamState};
use crate::parallel;
use crate::regularizer::{
    ranksim_loss_and_backward, sample_unique_labels, BatchSubset, RankSimConfig,
};

/// Environment variable that re-roots relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "RANKSIM_OUTPUT_ROOT";

/// Where the training data comes from: an inline spec or a saved directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Spec(SkewSpec),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Learning rate is multiplied by `lr_drop_factor` at the start of each
    /// listed epoch (0-based).
    pub lr_drop_epochs: Vec<usize>,
    pub lr_drop_factor: f64,
    pub loss: RegressionLossKind,
    pub hidden: Vec<usize>,
    pub weight_decay: f64,
    /// Batch size for the averaged ranking matrices.
    pub matrix_batch_size: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 90,
            batch_size: 64,
            lr: 1e-3,
            lr_drop_epochs: vec![60, 80],
            lr_drop_factor: 0.1,
            loss: RegressionLossKind::L1,
            hidden: vec![64, 64],
            weight_decay: 1e-4,
            matrix_batch_size: 32,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        if !(self.lr_drop_factor.is_finite() && self.lr_drop_factor > 0.0 && self.lr_drop_factor <= 1.0)
        {
            return Err(Error::InvalidConfig("lr_drop_factor must be in (0, 1]".into()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig("weight_decay must be nonnegative".into()));
        }
        if self.matrix_batch_size < 2 {
            return Err(Error::InvalidConfig(
                "matrix_batch_size must be at least 2".into(),
            ));
        }
        Ok(())
    }

    fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let drops = self.lr_drop_epochs.iter().filter(|&&d| epoch >= d).count();
        self.lr * self.lr_drop_factor.powi(drops as i32)
    }
}

/// Full declarative description of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub ranksim: Option<RankSimConfig>,
    #[serde(default)]
    pub lds: Option<LdsKernel>,
    #[serde(default)]
    pub reweight: ReweightScheme,
    #[serde(default)]
    pub focal_r: Option<FocalRConfig>,
    #[serde(default)]
    pub rrt: Option<RrtSchedule>,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        Self {
            dataset,
            ranksim: None,
            lds: None,
            reweight: ReweightScheme::None,
            focal_r: None,
            rrt: None,
            training: TrainingConfig::default(),
            seed: 0,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if let Some(r) = &self.ranksim {
            r.validate()?;
        }
        if let Some(k) = &self.lds {
            k.validate()?;
        }
        if let Some(f) = &self.focal_r {
            f.validate()?;
        }
        if let DatasetSource::Spec(spec) = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let config: Self = serde_json::from_reader(std::io::BufReader::new(file))?;
        config.validate()?;
        Ok(config)
    }

    /// Stable hash of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    /// Mean weighted task loss over the epoch's batches.
    pub task_loss: f64,
    /// Mean regularizer loss (unscaled by gamma) over the epoch's batches.
    pub ranksim_loss: f64,
    pub val_mae: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifacts {
    /// Resolved config echo; re-running it reproduces the metrics exactly.
    pub config: ExperimentConfig,
    pub best_epoch: usize,
    pub metrics_best: MetricReport,
    pub metrics_final: MetricReport,
    pub epochs: Vec<EpochLog>,
    pub checkpoint_best: Checkpoint,
    pub checkpoint_final: Checkpoint,
    /// Absent when the test set has fewer samples than one matrix batch.
    pub matrices: Option<AvgRankingMatrices>,
}

/// Machine-readable failure record written next to the last-good checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub error: String,
    pub epoch: usize,
}

/// Relative output directories are re-rooted under [`OUTPUT_ROOT_ENV`] when
/// that variable is set.
pub fn resolve_output_dir(dir: &Path) -> PathBuf {
    if dir.is_relative() {
        if let Ok(root) = std::env::var(OUTPUT_ROOT_ENV) {
            return PathBuf::from(root).join(dir);
        }
    }
    dir.to_path_buf()
}

/// Forward the whole set in chunks; deterministic regardless of parallelism.
fn predict(net: &RegressorNet, inputs: &[Vec<f64>], chunk: usize) -> Result<Vec<f64>> {
    let chunks: Vec<&[Vec<f64>]> = inputs.chunks(chunk.max(1)).collect();
    let outputs = parallel::map_auto(&chunks, |batch| {
        net.forward(batch).map(|fwd| fwd.predictions)
    });
    let mut predictions = Vec::with_capacity(inputs.len());
    for out in outputs {
        predictions.extend(out?);
    }
    Ok(predictions)
}

struct Trainer<'a> {
    config: &'a ExperimentConfig,
    dataset: &'a ImbalancedDataset,
    net: RegressorNet,
    adam: AdamState,
    /// Optimizer for the head-only stage, created lazily.
    head_adam: Option<AdamState>,
    shuffle_rng: ChaCha8Rng,
    subset_rng: ChaCha8Rng,
    epochs: Vec<EpochLog>,
    best_epoch: usize,
    best_val_mae: f64,
    best_checkpoint: Checkpoint,
    last_good: Checkpoint,
    global_epoch: usize,
}

impl<'a> Trainer<'a> {
    fn new(config: &'a ExperimentConfig, dataset: &'a ImbalancedDataset) -> Result<Self> {
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
        let net = RegressorNet::new(
            NetConfig {
                input_dim: dataset.spec.input_dim,
                hidden: config.training.hidden.clone(),
            },
            &mut init_rng,
        )?;
        let adam = AdamState::for_net(
            AdamConfig {
                lr: config.training.lr,
                weight_decay: config.training.weight_decay,
                ..AdamConfig::default()
            },
            &net,
        );
        let checkpoint = net.to_checkpoint();
        Ok(Self {
            config,
            dataset,
            net,
            adam,
            head_adam: None,
            shuffle_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x0051_4f55_u64),
            subset_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x005a_b5e7_u64),
            epochs: Vec::new(),
            best_epoch: 0,
            best_val_mae: f64::INFINITY,
            best_checkpoint: checkpoint.clone(),
            last_good: checkpoint,
            global_epoch: 0,
        })
    }

    /// Per-sample base weights for one stage (before focal factors).
    fn stage_weights(&self, scheme: ReweightScheme) -> Result<Vec<f64>> {
        let labels = &self.dataset.train.labels;
        if scheme == ReweightScheme::None {
            return Ok(vec![1.0; labels.len()]);
        }
        let mut density = bin_labels(labels, self.dataset.spec.bin_width)?;
        let use_smoothed = if let Some(kernel) = &self.config.lds {
            density = lds_smooth(&density, kernel)?;
            true
        } else {
            false
        };
        let bin_weights = reweight(&density, scheme, use_smoothed)?;
        Ok(sample_weights(&density, &bin_weights, labels))
    }

    fn run_stage(&mut self, plan: &StagePlan) -> Result<()> {
        let training = &self.config.training;
        let base_weights = self.stage_weights(plan.reweight)?;
        let ranksim_cfg = self.config.ranksim.filter(|_| plan.apply_ranksim);
        if plan.head_only && self.head_adam.is_none() {
            let head_lens: Vec<usize> = {
                let tensors = self.net.parameter_tensors();
                self.net
                    .head_tensor_indices()
                    .iter()
                    .map(|&i| tensors[i].len())
                    .collect()
            };
            self.head_adam = Some(AdamState::new(
                AdamConfig {
                    lr: training.lr,
                    weight_decay: training.weight_decay,
                    ..AdamConfig::default()
                },
                &head_lens,
            ));
        }

        let n = self.dataset.train.len();
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..plan.epochs {
            let lr = training.lr_at_epoch(self.global_epoch);
            self.adam.set_lr(lr);
            if let Some(head) = &mut self.head_adam {
                head.set_lr(lr);
            }
            order.shuffle(&mut self.shuffle_rng);

            let mut task_loss_sum = 0.0;
            let mut ranksim_loss_sum = 0.0;
            let mut batches = 0usize;
            for batch_ids in order.chunks(training.batch_size) {
                let (task, reg) = self.train_step(batch_ids, &base_weights, ranksim_cfg, plan)?;
                task_loss_sum += task;
                ranksim_loss_sum += reg;
                batches += 1;
            }

            let val_predictions = predict(&self.net, &self.dataset.val.inputs, 256)?;
            let val_mae = mae(&val_predictions, &self.dataset.val.labels)?;
            if !val_mae.is_finite() {
                return Err(Error::Diverged(format!(
                    "validation MAE is not finite at epoch {}",
                    self.global_epoch
                )));
            }
            self.epochs.push(EpochLog {
                epoch: self.global_epoch,
                lr,
                task_loss: task_loss_sum / batches.max(1) as f64,
                ranksim_loss: ranksim_loss_sum / batches.max(1) as f64,
                val_mae,
            });
            if val_mae < self.best_val_mae {
                self.best_val_mae = val_mae;
                self.best_epoch = self.global_epoch;
                self.best_checkpoint = self.net.to_checkpoint();
            }
            self.last_good = self.net.to_checkpoint();
            self.global_epoch += 1;
        }
        Ok(())
    }

    fn train_step(
        &mut self,
        batch_ids: &[usize],
        base_weights: &[f64],
        ranksim_cfg: Option<RankSimConfig>,
        plan: &StagePlan,
    ) -> Result<(f64, f64)> {
        let train = &self.dataset.train;
        let batch_x: Vec<Vec<f64>> = batch_ids.iter().map(|&i| train.inputs[i].clone()).collect();
        let batch_y: Vec<f64> = batch_ids.iter().map(|&i| train.labels[i]).collect();

        let fwd = self.net.forward(&batch_x)?;

        let mut weights: Vec<f64> = batch_ids.iter().map(|&i| base_weights[i]).collect();
        if let Some(focal) = &self.config.focal_r {
            let abs_errors: Vec<f64> = fwd
                .predictions
                .iter()
                .zip(&batch_y)
                .map(|(p, y)| (p - y).abs())
                .collect();
            let factors = focal_r_weights(&abs_errors, focal)?;
            for (w, f) in weights.iter_mut().zip(&factors) {
                *w *= f;
            }
        }

        let (task_loss, pred_grad) =
            regression_loss(&fwd.predictions, &batch_y, &weights, self.config.training.loss)?;
        if !task_loss.is_finite() {
            return Err(Error::Diverged(format!(
                "task loss is not finite at epoch {}",
                self.global_epoch
            )));
        }

        let mut reg_loss = 0.0;
        let mut feature_grad: Option<Matrix> = None;
        if let Some(cfg) = &ranksim_cfg {
            let positions: Vec<usize> = if cfg.unique_label_sampling {
                sample_unique_labels(&batch_y, &mut self.subset_rng)
            } else {
                (0..batch_y.len()).collect()
            };
            let feature_rows = fwd.features().to_rows();
            let subset = BatchSubset::gather(&positions, &batch_y, &feature_rows);
            let out = ranksim_loss_and_backward(&subset, cfg)?;
            reg_loss = out.loss;
            if cfg.gamma != 0.0 && !out.degenerate {
                let mut grad = Matrix::zeros(batch_y.len(), self.net.feature_dim());
                for (k, &pos) in subset.indices.iter().enumerate() {
                    let row = grad.row_mut(pos);
                    for (slot, g) in row.iter_mut().zip(&out.feature_grads[k]) {
                        *slot += cfg.gamma * g;
                    }
                }
                feature_grad = Some(grad);
            }
        }

        let grads = self.net.backward(
            &fwd,
            Upstream {
                prediction_grad: Some(&pred_grad),
                feature_grad: feature_grad.as_ref(),
            },
        )?;

        if plan.head_only {
            let head_indices = self.net.head_tensor_indices();
            let grad_tensors = grads.tensors();
            let head_grads: Vec<&[f64]> = head_indices.iter().map(|&i| grad_tensors[i]).collect();
            let mut params = self.net.parameter_tensors_mut();
            let mut head_params: Vec<&mut [f64]> = params
                .iter_mut()
                .enumerate()
                .filter(|(i, _)| head_indices.contains(i))
                .map(|(_, p)| &mut **p)
                .collect();
            self.head_adam
                .as_mut()
                .expect("head optimizer initialized")
                .step(&mut head_params, &head_grads)?;
        } else {
            let grad_tensors = grads.tensors();
            let mut params = self.net.parameter_tensors_mut();
            self.adam.step(&mut params, &grad_tensors)?;
        }
        Ok((task_loss, reg_loss))
    }
}

/// Ranking matrices over the test set, label-sorted and chunked; a trailing
/// ragged batch is dropped. `None` when the test set is smaller than one
/// batch.
pub fn ranking_matrices_for(
    net: &RegressorNet,
    dataset: &ImbalancedDataset,
    batch_size: usize,
    kind: crate::similarity::FeatureSimilarityKind,
) -> Result<Option<AvgRankingMatrices>> {
    let test = &dataset.test;
    if test.len() < batch_size {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..test.len()).collect();
    order.sort_by(|&a, &b| test.labels[a].partial_cmp(&test.labels[b]).expect("finite"));

    let mut label_batches = Vec::new();
    let mut feature_batches = Vec::new();
    for chunk in order.chunks(batch_size) {
        if chunk.len() < batch_size {
            break;
        }
        let labels: Vec<f64> = chunk.iter().map(|&i| test.labels[i]).collect();
        let inputs: Vec<Vec<f64>> = chunk.iter().map(|&i| test.inputs[i].clone()).collect();
        let features = net.forward(&inputs)?.features().to_rows();
        label_batches.push(labels);
        feature_batches.push(features);
    }
    Ok(Some(average_ranking_matrices(
        &label_batches,
        &feature_batches,
        kind,
    )?))
}

fn write_artifacts(dir: &Path, artifacts: &RunArtifacts, dataset: &ImbalancedDataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&artifacts.config)?,
    )?;
    artifacts.metrics_best.save_json(&dir.join("metrics_best.json"))?;
    artifacts.metrics_final.save_json(&dir.join("metrics_final.json"))?;
    artifacts.metrics_best.save_csv(&dir.join("metrics_best.csv"))?;
    artifacts.metrics_final.save_csv(&dir.join("metrics_final.csv"))?;
    artifacts.checkpoint_best.save_json(&dir.join("checkpoint_best.json"))?;
    artifacts.checkpoint_final.save_json(&dir.join("checkpoint_final.json"))?;

    let mut writer = csv::Writer::from_path(dir.join("training_log.csv"))?;
    writer.write_record(["epoch", "lr", "task_loss", "ranksim_loss", "val_mae"])?;
    for log in &artifacts.epochs {
        writer.write_record([
            log.epoch.to_string(),
            log.lr.to_string(),
            log.task_loss.to_string(),
            log.ranksim_loss.to_string(),
            log.val_mae.to_string(),
        ])?;
    }
    writer.flush()?;

    if let Some(matrices) = &artifacts.matrices {
        matrices.save_csv(
            &dir.join("label_ranking_matrix.csv"),
            &dir.join("feature_ranking_matrix.csv"),
        )?;
    }

    // density/weight table for the configured scheme
    let mut density = bin_labels(&dataset.train.labels, dataset.spec.bin_width)?;
    let use_smoothed = if let Some(kernel) = &artifacts.config.lds {
        density = lds_smooth(&density, kernel)?;
        true
    } else {
        false
    };
    let weights = match reweight(&density, artifacts.config.reweight, use_smoothed) {
        Ok(w) => Some(w),
        Err(_) => None,
    };
    export_density_csv(&dir.join("density.csv"), &density, weights.as_deref())?;
    Ok(())
}

fn resolve_dataset(config: &ExperimentConfig) -> Result<ImbalancedDataset> {
    match &config.dataset {
        DatasetSource::Spec(spec) => generate(spec),
        DatasetSource::Path(path) => load(path),
    }
}

/// Execute one training run. Deterministic given the config; on divergence
/// the last-good checkpoint and an error record are written to the output
/// directory before the error is returned.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let dataset = resolve_dataset(config)?;
    let output_dir = config.output_dir.as_ref().map(|d| resolve_output_dir(d));

    let mut trainer = Trainer::new(config, &dataset)?;
    let stages: Vec<StagePlan> = match &config.rrt {
        Some(schedule) => schedule.stages(config.ranksim.is_some()).to_vec(),
        None => vec![StagePlan {
            epochs: config.training.epochs,
            head_only: false,
            reweight: config.reweight,
            apply_ranksim: config.ranksim.is_some(),
        }],
    };

    for plan in &stages {
        if let Err(err) = trainer.run_stage(plan) {
            if let Some(dir) = &output_dir {
                std::fs::create_dir_all(dir)?;
                trainer.last_good.save_json(&dir.join("checkpoint_last_good.json"))?;
                let record = ErrorRecord {
                    error: err.to_string(),
                    epoch: trainer.global_epoch,
                };
                std::fs::write(dir.join("error.json"), serde_json::to_string_pretty(&record)?)?;
            }
            return Err(err);
        }
    }

    let Trainer {
        net,
        epochs,
        best_epoch,
        best_checkpoint,
        ..
    } = trainer;

    let best_net = RegressorNet::from_checkpoint(&best_checkpoint)?;
    let regions = dataset.regions_of(&dataset.test.labels);
    let final_predictions = predict(&net, &dataset.test.inputs, 256)?;
    let best_predictions = predict(&best_net, &dataset.test.inputs, 256)?;
    let metrics_final = report(&final_predictions, &dataset.test.labels, &regions)?;
    let metrics_best = report(&best_predictions, &dataset.test.labels, &regions)?;

    let sim_kind = config.ranksim.map(|r| r.feature_sim).unwrap_or_default();
    let matrices = ranking_matrices_for(
        &best_net,
        &dataset,
        config.training.matrix_batch_size,
        sim_kind,
    )?;

    let artifacts = RunArtifacts {
        config: config.clone(),
        best_epoch,
        metrics_best,
        metrics_final,
        epochs,
        checkpoint_best: best_checkpoint,
        checkpoint_final: net.to_checkpoint(),
        matrices,
    };
    if let Some(dir) = &output_dir {
        write_artifacts(dir, &artifacts, &dataset)?;
    }
    Ok(artifacts)
}

/// Outcome of one sweep entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub reweight: ReweightScheme,
    pub lds: bool,
    pub focal_r: bool,
    pub rrt: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    /// One CSV row per config, keyed by config hash.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record([
            "config_hash",
            "seed",
            "status",
            "gamma",
            "lambda",
            "reweight",
            "lds",
            "focal_r",
            "rrt",
            "mae_all",
            "mae_many",
            "mae_medium",
            "mae_few",
            "mae_zero",
            "gm_all",
            "mse_all",
            "error",
        ])?;
        for row in &self.rows {
            let m = row.metrics.as_ref();
            let region_mae = |get: &dyn Fn(&MetricReport) -> Option<f64>| {
                m.and_then(get).map_or(String::new(), |v| v.to_string())
            };
            writer.write_record([
                row.config_hash.clone(),
                row.seed.to_string(),
                row.status.clone(),
                row.gamma.map_or(String::new(), |v| v.to_string()),
                row.lambda.map_or(String::new(), |v| v.to_string()),
                format!("{:?}", row.reweight).to_lowercase(),
                row.lds.to_string(),
                row.focal_r.to_string(),
                row.rrt.to_string(),
                region_mae(&|r| Some(r.all.mae)),
                region_mae(&|r| r.many.as_ref().map(|x| x.mae)),
                region_mae(&|r| r.medium.as_ref().map(|x| x.mae)),
                region_mae(&|r| r.few.as_ref().map(|x| x.mae)),
                region_mae(&|r| r.zero.as_ref().map(|x| x.mae)),
                region_mae(&|r| Some(r.all.gm)),
                region_mae(&|r| Some(r.all.mse)),
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Run every config, aggregating best-checkpoint metrics. Individual
/// failures are recorded and the sweep continues.
pub fn sweep(configs: &[ExperimentConfig]) -> SweepSummary {
    let rows = parallel::map_auto(configs, |config| {
        let outcome = run(config);
        let mut row = SweepRow {
            config_hash: config.hash(),
            seed: config.seed,
            status: "ok".into(),
            error: None,
            gamma: config.ranksim.map(|r| r.gamma),
            lambda: config.ranksim.map(|r| r.lambda),
            reweight: config.reweight,
            lds: config.lds.is_some(),
            focal_r: config.focal_r.is_some(),
            rrt: config.rrt.is_some(),
            metrics: None,
        };
        match outcome {
            Ok(artifacts) => row.metrics = Some(artifacts.metrics_best),
            Err(err) => {
                row.status = "error".into();
                row.error = Some(err.to_string());
            }
        }
        row
    });
    SweepSummary { rows }
}

//! End-to-end trainer behavior: reproducibility contracts, the zero-weight
//! regularizer identity, two-stage retraining guarantees, divergence
//! handling, and the learnability floor of the synthetic benchmark.

use ranksim::baselines::RrtSchedule;
use ranksim::dataset::{generate, SkewSpec};
use ranksim::experiment::{run, sweep, DatasetSource, ExperimentConfig, TrainingConfig};
use ranksim::metrics::mae;
use ranksim::model::RegressorNet;
use ranksim::regularizer::RankSimConfig;

fn small_spec(seed: u64) -> SkewSpec {
    SkewSpec {
        label_range: [0.0, 20.0],
        n_train: 320,
        val_per_bin: 2,
        test_per_bin: 3,
        many_min: 20,
        few_max: 6,
        seed,
        ..SkewSpec::default()
    }
}

fn small_config(seed: u64) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(DatasetSource::Spec(small_spec(seed)));
    config.training = TrainingConfig {
        epochs: 5,
        batch_size: 32,
        hidden: vec![16, 16],
        lr_drop_epochs: vec![],
        matrix_batch_size: 8,
        ..TrainingConfig::default()
    };
    config.seed = seed;
    config
}

#[test]
fn zero_gamma_matches_disabled_regularizer_exactly() {
    let mut with_zero = small_config(3);
    with_zero.ranksim = Some(RankSimConfig {
        gamma: 0.0,
        ..RankSimConfig::default()
    });
    let mut disabled = small_config(3);
    disabled.ranksim = None;

    let a = run(&with_zero).unwrap();
    let b = run(&disabled).unwrap();

    let val_a: Vec<f64> = a.epochs.iter().map(|e| e.val_mae).collect();
    let val_b: Vec<f64> = b.epochs.iter().map(|e| e.val_mae).collect();
    assert_eq!(val_a, val_b);
    assert_eq!(a.metrics_final, b.metrics_final);
    assert_eq!(a.checkpoint_final.tensors.len(), b.checkpoint_final.tensors.len());
    for (x, y) in a
        .checkpoint_final
        .tensors
        .iter()
        .zip(&b.checkpoint_final.tensors)
    {
        assert_eq!(x.data, y.data);
    }
}

#[test]
fn identical_configs_reproduce_identical_artifacts() {
    let mut config = small_config(11);
    config.ranksim = Some(RankSimConfig::default());
    let a = run(&config).unwrap();
    let b = run(&config).unwrap();
    assert_eq!(
        serde_json::to_string(&a.metrics_final).unwrap(),
        serde_json::to_string(&b.metrics_final).unwrap()
    );
    assert_eq!(
        serde_json::to_string(&a.epochs).unwrap(),
        serde_json::to_string(&b.epochs).unwrap()
    );
}

#[test]
fn disabling_unique_label_sampling_still_trains() {
    let mut config = small_config(7);
    config.ranksim = Some(RankSimConfig {
        unique_label_sampling: false,
        ..RankSimConfig::default()
    });
    let artifacts = run(&config).unwrap();
    assert!(artifacts.metrics_final.all.mae.is_finite());
    assert!(artifacts.epochs.iter().all(|e| e.ranksim_loss >= 0.0));
}

#[test]
fn rrt_stage_two_freezes_everything_but_the_head() {
    let mut stage1_only = small_config(19);
    stage1_only.rrt = Some(RrtSchedule::new(3, 0));
    let mut full = small_config(19);
    full.rrt = Some(RrtSchedule::new(3, 2));

    let a = run(&stage1_only).unwrap();
    let b = run(&full).unwrap();

    // hidden tensors must be bit-identical; only the head may move
    let head_names = ["head.weight", "head.bias"];
    let mut head_changed = false;
    for (x, y) in a
        .checkpoint_final
        .tensors
        .iter()
        .zip(&b.checkpoint_final.tensors)
    {
        assert_eq!(x.name, y.name);
        if head_names.contains(&x.name.as_str()) {
            head_changed |= x.data != y.data;
        } else {
            assert_eq!(x.data, y.data, "frozen tensor {} moved", x.name);
        }
    }
    assert!(head_changed, "stage 2 did not touch the head");
}

#[test]
fn rrt_with_zero_stage_two_equals_plain_training() {
    let mut rrt = small_config(23);
    rrt.rrt = Some(RrtSchedule::new(4, 0));
    let mut plain = small_config(23);
    plain.training.epochs = 4;
    plain.reweight = ranksim::baselines::ReweightScheme::None;

    let a = run(&rrt).unwrap();
    let b = run(&plain).unwrap();
    for (x, y) in a
        .checkpoint_final
        .tensors
        .iter()
        .zip(&b.checkpoint_final.tensors)
    {
        assert_eq!(x.data, y.data);
    }
}

#[test]
fn rrt_stage_two_head_loss_is_nonincreasing() {
    let mut config = small_config(29);
    config.training.epochs = 0;
    config.training.lr = 5e-4;
    config.rrt = Some(RrtSchedule::new(3, 12));
    let artifacts = run(&config).unwrap();
    let stage2: Vec<f64> = artifacts.epochs[3..].iter().map(|e| e.task_loss).collect();
    assert_eq!(stage2.len(), 12);
    for pair in stage2.windows(2) {
        assert!(
            pair[1] <= pair[0] * 1.02 + 1e-9,
            "stage-2 loss rose: {} -> {}",
            pair[0],
            pair[1]
        );
    }
    assert!(stage2.last().unwrap() <= stage2.first().unwrap());
}

#[test]
fn divergence_aborts_with_error_record_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(31);
    config.training.lr = 1e14;
    config.training.loss = ranksim::model::RegressionLossKind::Mse;
    config.training.epochs = 30;
    config.output_dir = Some(dir.path().join("diverged"));

    let err = run(&config).unwrap_err();
    assert!(err.to_string().contains("diverged"));
    let out = dir.path().join("diverged");
    assert!(out.join("error.json").exists());
    assert!(out.join("checkpoint_last_good.json").exists());
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert!(record["error"].as_str().unwrap().contains("diverged"));
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(37);
    config.ranksim = Some(RankSimConfig::default());
    config.reweight = ranksim::baselines::ReweightScheme::Sqinv;
    config.lds = Some(ranksim::baselines::LdsKernel::default());
    config.output_dir = Some(dir.path().to_path_buf());
    run(&config).unwrap();
    for file in [
        "config.json",
        "metrics_best.json",
        "metrics_final.json",
        "metrics_best.csv",
        "metrics_final.csv",
        "checkpoint_best.json",
        "checkpoint_final.json",
        "training_log.csv",
        "label_ranking_matrix.csv",
        "feature_ranking_matrix.csv",
        "density.csv",
    ] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    // the echoed config reproduces the run
    let echoed = ExperimentConfig::load_json(&dir.path().join("config.json")).unwrap();
    assert_eq!(echoed.hash(), config.hash());
}

/// With zero noise the regressor must fit the clean synthetic task well
/// within 200 epochs, which gates every directional experiment downstream.
#[test]
fn learnability_floor_on_clean_data() {
    let spec = SkewSpec {
        n_train: 2000,
        noise_sigma: 0.0,
        ..SkewSpec::default()
    };
    let mut config = ExperimentConfig::new(DatasetSource::Spec(spec.clone()));
    config.training.epochs = 200;
    config.training.lr_drop_epochs = vec![150, 180];
    config.seed = 5;

    let artifacts = run(&config).unwrap();
    let net = RegressorNet::from_checkpoint(&artifacts.checkpoint_final).unwrap();
    let dataset = generate(&spec).unwrap();
    let mut predictions = Vec::new();
    for chunk in dataset.train.inputs.chunks(256) {
        predictions.extend(net.forward(chunk).unwrap().predictions);
    }
    let train_mae = mae(&predictions, &dataset.train.labels).unwrap();
    let range = spec.label_range[1] - spec.label_range[0];
    assert!(
        train_mae < 0.05 * range,
        "train MAE {train_mae} is above the learnability floor {}",
        0.05 * range
    );
}

#[test]
fn sweep_aggregates_rows_and_records_failures() {
    let mut good = small_config(41);
    good.ranksim = Some(RankSimConfig::default());
    let single = sweep(std::slice::from_ref(&good));
    assert_eq!(single.rows.len(), 1);
    assert_eq!(single.rows[0].status, "ok");
    assert_eq!(single.rows[0].config_hash, good.hash());

    // gamma sweep: three rows, echoed in order
    let gammas = [0.01, 1.0, 100.0];
    let configs: Vec<ExperimentConfig> = gammas
        .iter()
        .map(|&gamma| {
            let mut c = small_config(41);
            c.ranksim = Some(RankSimConfig {
                gamma,
                ..RankSimConfig::default()
            });
            c
        })
        .collect();
    let summary = sweep(&configs);
    assert_eq!(summary.rows.len(), 3);
    for (row, &gamma) in summary.rows.iter().zip(&gammas) {
        assert_eq!(row.gamma, Some(gamma));
        assert_eq!(row.status, "ok");
        assert!(row.metrics.as_ref().unwrap().all.mae.is_finite());
    }

    // a failing config is recorded without sinking the sweep
    let mut bad = small_config(43);
    bad.training.lr = 1e14;
    bad.training.loss = ranksim::model::RegressionLossKind::Mse;
    bad.training.epochs = 30;
    let mixed = sweep(&[good, bad]);
    assert_eq!(mixed.rows.len(), 2);
    assert_eq!(mixed.rows[0].status, "ok");
    assert_eq!(mixed.rows[1].status, "error");
    assert!(mixed.rows[1].error.as_ref().unwrap().contains("diverged"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    mixed.save_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("config_hash,seed,status"));
    assert_eq!(text.lines().count(), 3);
}

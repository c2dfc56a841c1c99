use ranksim::dataset::SkewSpec;
use ranksim::experiment::{run, DatasetSource, ExperimentConfig};
use ranksim::model::RegressionLossKind;
use ranksim::parallel;
use ranksim::regularizer::RankSimConfig;

#[test]
fn probe_noise_grid() {
    let mut jobs: Vec<(f64, RegressionLossKind, Option<f64>)> = vec![];
    for &noise in &[0.5f64, 0.8, 1.2] {
        for loss in [RegressionLossKind::L1, RegressionLossKind::Mse] {
            for gamma in [None, Some(100.0), Some(10.0)] {
                jobs.push((noise, loss, gamma));
            }
        }
    }
    let results = parallel::map_auto(&jobs, |&(noise, loss, gamma)| {
        let spec = SkewSpec { seed: 2, noise_sigma: noise, ..SkewSpec::default() };
        let mut config = ExperimentConfig::new(DatasetSource::Spec(spec));
        config.seed = 2;
        config.training.loss = loss;
        if let Some(g) = gamma {
            config.ranksim = Some(RankSimConfig { gamma: g, ..RankSimConfig::default() });
        }
        let a = run(&config).unwrap();
        let m = &a.metrics_best;
        (noise, loss, gamma, m.all.mae, m.many.as_ref().map(|x| x.mae).unwrap_or(f64::NAN),
         m.medium.as_ref().map(|x| x.mae).unwrap_or(f64::NAN),
         m.few.as_ref().map(|x| x.mae).unwrap_or(f64::NAN),
         m.zero.as_ref().map(|x| x.mae).unwrap_or(f64::NAN))
    });
    for (noise, loss, gamma, all, many, med, few, zero) in results {
        println!("noise={noise} loss={loss:?} gamma={gamma:?}: all={all:6.3} many={many:6.3} med={med:6.3} few={few:7.3} zero={zero:7.3}");
    }
}

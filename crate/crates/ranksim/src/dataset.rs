//! Seeded synthetic imbalanced regression datasets: skewed training labels,
//! balanced validation/test splits, and optional zero-shot label gaps.
//!
//! Inputs are a fixed random-Fourier embedding of the label plus Gaussian
//! noise, so the regression task is well-posed and generation is fully
//! deterministic given the spec.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the training-label distribution over bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Exponential { rate: f64 },
    Zipf { exponent: f64 },
    TwoPeak,
}

/// Full description of one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkewSpec {
    pub label_range: [f64; 2],
    pub n_train: usize,
    pub profile: Profile,
    /// Bins removed from training; validation/test still cover them.
    pub zero_shot_bins: Vec<usize>,
    pub noise_sigma: f64,
    pub input_dim: usize,
    pub seed: u64,
    pub bin_width: f64,
    pub val_per_bin: usize,
    pub test_per_bin: usize,
    /// A bin is many-shot when its train count is strictly greater.
    pub many_min: u64,
    /// A bin is few-shot when its train count is strictly smaller (and > 0).
    pub few_max: u64,
}

impl Default for SkewSpec {
    fn default() -> Self {
        Self {
            label_range: [0.0, 100.0],
            n_train: 5000,
            profile: Profile::Exponential { rate: 0.05 },
            zero_shot_bins: Vec::new(),
            noise_sigma: 0.2,
            input_dim: 16,
            seed: 0,
            bin_width: 1.0,
            val_per_bin: 3,
            test_per_bin: 5,
            many_min: 50,
            few_max: 10,
        }
    }
}

impl SkewSpec {
    pub fn n_bins(&self) -> usize {
        let span = self.label_range[1] - self.label_range[0];
        ((span / self.bin_width) - 1e-9).ceil() as usize
    }

    pub fn bin_of(&self, y: f64) -> usize {
        let idx = ((y - self.label_range[0]) / self.bin_width).floor() as i64;
        idx.clamp(0, self.n_bins() as i64 - 1) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.label_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidConfig(format!(
                "label range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if self.n_train == 0 {
            return Err(Error::InvalidConfig("n_train must be positive".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::InvalidConfig("bin_width must be positive".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise_sigma must be nonnegative".into()));
        }
        let n_bins = self.n_bins();
        if let Some(&bad) = self.zero_shot_bins.iter().find(|&&b| b >= n_bins) {
            return Err(Error::InvalidConfig(format!(
                "zero-shot bin {bad} outside 0..{n_bins}"
            )));
        }
        if self.many_min <= self.few_max {
            return Err(Error::InvalidConfig(format!(
                "shot thresholds must satisfy many_min > few_max, got ({}, {})",
                self.many_min, self.few_max
            )));
        }
        match self.profile {
            Profile::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                Err(Error::InvalidConfig("exponential rate must be positive".into()))
            }
            Profile::Zipf { exponent } if !(exponent.is_finite() && exponent > 0.0) => {
                Err(Error::InvalidConfig("zipf exponent must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Unnormalized bin masses of the profile before zero-shot exclusion.
    pub fn profile_masses(&self) -> Vec<f64> {
        let b = self.n_bins();
        (0..b)
            .map(|k| match self.profile {
                Profile::Exponential { rate } => (-rate * k as f64).exp(),
                Profile::Zipf { exponent } => 1.0 / ((k + 1) as f64).powf(exponent),
                Profile::TwoPeak => {
                    let sigma = b as f64 / 12.0;
                    let bump = |center: f64| {
                        (-(k as f64 - center).powi(2) / (2.0 * sigma * sigma)).exp()
                    };
                    0.7 * bump(0.25 * b as f64) + 0.3 * bump(0.75 * b as f64)
                }
            })
            .collect()
    }
}

/// One data split: inputs and matching labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Training-count region of a label bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotRegion {
    Many,
    Medium,
    Few,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalancedDataset {
    pub spec: SkewSpec,
    pub train: Split,
    pub val: Split,
    pub test: Split,
}

/// Fixed seeded embedding of labels into input space:
/// `x_k = sin(omega_k * y + phi_k)`. The first frequency is kept slow so the
/// map stays globally injective over the label range.
struct FourierEmbedding {
    omegas: Vec<f64>,
    phases: Vec<f64>,
}

impl FourierEmbedding {
    fn sample(spec: &SkewSpec, rng: &mut ChaCha8Rng) -> Self {
        let span = spec.label_range[1] - spec.label_range[0];
        let base = std::f64::consts::TAU / span;
        let omegas = (0..spec.input_dim)
            .map(|k| {
                let scale = if k == 0 {
                    rng.gen_range(0.3..0.8)
                } else {
                    rng.gen_range(0.3..3.0)
                };
                base * scale
            })
            .collect();
        let phases = (0..spec.input_dim)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        Self { omegas, phases }
    }

    fn embed(&self, y: f64, noise: &Option<Normal<f64>>, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.omegas
            .iter()
            .zip(&self.phases)
            .map(|(&w, &p)| {
                let clean = (w * y + p).sin();
                match noise {
                    Some(n) => clean + n.sample(rng),
                    None => clean,
                }
            })
            .collect()
    }
}

/// Generate a dataset from a spec; deterministic given the seed.
pub fn generate(spec: &SkewSpec) -> Result<ImbalancedDataset> {
    spec.validate()?;
    let n_bins = spec.n_bins();
    let mut masses = spec.profile_masses();
    for &b in &spec.zero_shot_bins {
        masses[b] = 0.0;
    }
    if masses.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidConfig("all bins excluded".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let embedding = FourierEmbedding::sample(spec, &mut rng);
    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let lo = spec.label_range[0];
    let width = spec.bin_width;

    let bin_picker = WeightedIndex::new(&masses)
        .map_err(|e| Error::InvalidConfig(format!("invalid profile masses: {e}")))?;
    let draw_in_bin = |bin: usize, rng: &mut ChaCha8Rng| -> f64 {
        lo + (bin as f64 + rng.gen::<f64>()) * width
    };

    let mut train = Split {
        inputs: Vec::with_capacity(spec.n_train),
        labels: Vec::with_capacity(spec.n_train),
    };
    for _ in 0..spec.n_train {
        let bin = bin_picker.sample(&mut rng);
        let y = draw_in_bin(bin, &mut rng);
        train.inputs.push(embedding.embed(y, &noise, &mut rng));
        train.labels.push(y);
    }

    let balanced = |per_bin: usize, rng: &mut ChaCha8Rng| -> Split {
        let mut split = Split {
            inputs: Vec::with_capacity(per_bin * n_bins),
            labels: Vec::with_capacity(per_bin * n_bins),
        };
        for bin in 0..n_bins {
            for _ in 0..per_bin {
                let y = lo + (bin as f64 + rng.gen::<f64>()) * width;
                split.inputs.push(embedding.embed(y, &noise, rng));
                split.labels.push(y);
            }
        }
        split
    };
    let val = balanced(spec.val_per_bin, &mut rng);
    let test = balanced(spec.test_per_bin, &mut rng);

    Ok(ImbalancedDataset {
        spec: spec.clone(),
        train,
        val,
        test,
    })
}

impl ImbalancedDataset {
    pub fn n_bins(&self) -> usize {
        self.spec.n_bins()
    }

    /// Training-sample count per spec bin.
    pub fn train_bin_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_bins()];
        for &y in &self.train.labels {
            counts[self.spec.bin_of(y)] += 1;
        }
        counts
    }

    /// Region of every bin, a pure function of train counts and thresholds.
    pub fn shot_partition(&self) -> Vec<ShotRegion> {
        shot_partition(&self.train_bin_counts(), self.spec.many_min, self.spec.few_max)
    }

    /// Region of each provided label under this dataset's partition.
    pub fn regions_of(&self, labels: &[f64]) -> Vec<ShotRegion> {
        let partition = self.shot_partition();
        labels
            .iter()
            .map(|&y| partition[self.spec.bin_of(y)])
            .collect()
    }
}

/// Classify bins by training count: strictly more than `many_min` is
/// many-shot, zero is zero-shot, strictly fewer than `few_max` (but nonzero)
/// is few-shot, everything else medium.
pub fn shot_partition(counts: &[u64], many_min: u64, few_max: u64) -> Vec<ShotRegion> {
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                ShotRegion::Zero
            } else if c > many_min {
                ShotRegion::Many
            } else if c < few_max {
                ShotRegion::Few
            } else {
                ShotRegion::Medium
            }
        })
        .collect()
}

const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// Write `data.csv` (header `x_0..x_{d-1}, y, split`) and `spec.json`.
pub fn save(dataset: &ImbalancedDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let spec_file = std::fs::File::create(dir.join("spec.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(spec_file), &dataset.spec)?;

    let mut writer = csv::Writer::from_path(dir.join("data.csv"))?;
    let mut header: Vec<String> = (0..dataset.spec.input_dim)
        .map(|k| format!("x_{k}"))
        .collect();
    header.push("y".into());
    header.push("split".into());
    writer.write_record(&header)?;
    for (split, name) in [&dataset.train, &dataset.val, &dataset.test]
        .iter()
        .zip(SPLIT_NAMES)
    {
        for (x, &y) in split.inputs.iter().zip(&split.labels) {
            let mut record: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            record.push(format!("{y:?}"));
            record.push(name.into());
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Load a dataset saved by [`save`].
pub fn load(dir: &Path) -> Result<ImbalancedDataset> {
    let spec_file = std::fs::File::open(dir.join("spec.json"))?;
    let spec: SkewSpec = serde_json::from_reader(std::io::BufReader::new(spec_file))?;
    spec.validate()?;

    let mut splits = [
        Split { inputs: vec![], labels: vec![] },
        Split { inputs: vec![], labels: vec![] },
        Split { inputs: vec![], labels: vec![] },
    ];
    let mut reader = csv::Reader::from_path(dir.join("data.csv"))?;
    let d = spec.input_dim;
    for record in reader.records() {
        let record = record?;
        if record.len() != d + 2 {
            return Err(Error::InvalidConfig(format!(
                "csv row has {} fields, expected {}",
                record.len(),
                d + 2
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("bad number {s:?}: {e}")))
        };
        let x: Vec<f64> = (0..d).map(|k| parse(&record[k])).collect::<Result<_>>()?;
        let y = parse(&record[d])?;
        let split = match &record[d + 1] {
            "train" => 0,
            "val" => 1,
            "test" => 2,
            other => {
                return Err(Error::InvalidConfig(format!("unknown split {other:?}")));
            }
        };
        splits[split].inputs.push(x);
        splits[split].labels.push(y);
    }
    let [train, val, test] = splits;
    Ok(ImbalancedDataset {
        spec,
        train,
        val,
        test,
    })
}

//! Deterministic desk-scale model construction.
//!
//! This is not gradient training. Thresholds are per-feature quantiles,
//! connections are drawn at random, and each truth-table entry is set by a
//! vote: entry `a` of a LUT belonging to class `c` is 1 when the samples that
//! address `a` contain a larger share of class `c` than the whole training set
//! does. A greedy pass then flips single table bits while training accuracy
//! improves. The result is good enough to exercise quantization, netlist
//! generation and equivalence checks on synthetic data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dataset::{Dataset, Sample};
use crate::encoder::{distributive_thresholds, EncodeError};
use crate::model::{DwnModel, ModelConfig, ModelError, ModelParts, ThresholdFormat, TruthTable};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("cannot fit a model to an empty dataset")]
    EmptyDataset,
    #[error("dataset has {found} features, model shape expects {expected}")]
    FeatureCount { expected: usize, found: usize },
    #[error("sample {sample} has label {label}, model shape has {classes} classes")]
    LabelOutOfRange {
        sample: usize,
        label: usize,
        classes: usize,
    },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    pub seed: u64,
    /// Maximum number of single-bit table flips in the greedy pass.
    pub hill_climb_budget: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            hill_climb_budget: 64,
        }
    }
}

/// Encoder bits of every sample, row-major `[sample][bit]`.
fn encode_all(thresholds: &[Vec<f64>], data: &Dataset) -> Vec<Vec<bool>> {
    data.samples()
        .iter()
        .map(|s| {
            s.features
                .iter()
                .zip(thresholds)
                .flat_map(|(&x, row)| row.iter().map(move |&t| x >= t))
                .collect()
        })
        .collect()
}

/// Lowest-index argmax, used for the incremental accuracy bookkeeping.
fn best_class(scores: &[u32]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Fits a model of shape `config` to normalized `data`.
pub fn fit_toy(
    data: &Dataset,
    config: &ModelConfig,
    options: FitOptions,
) -> Result<DwnModel, TrainError> {
    config.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if data.num_features() != config.num_features {
        return Err(TrainError::FeatureCount {
            expected: config.num_features,
            found: data.num_features(),
        });
    }
    if let Some((sample, s)) = data
        .samples()
        .iter()
        .enumerate()
        .find(|(_, s)| s.label >= config.num_classes)
    {
        return Err(TrainError::LabelOutOfRange {
            sample,
            label: s.label,
            classes: config.num_classes,
        });
    }

    let thresholds = (0..config.num_features)
        .map(|f| distributive_thresholds(&data.column(f), config.bits_per_feature))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let width = config.encoded_width();
    let k = config.lut_arity;
    let connections: Vec<Vec<usize>> = (0..config.num_luts())
        .map(|_| (0..k).map(|_| rng.random_range(0..width)).collect())
        .collect();

    let encoded = encode_all(&thresholds, data);
    let n = data.len();
    let mut class_count = vec![0usize; config.num_classes];
    for s in data.samples() {
        class_count[s.label] += 1;
    }

    // addresses[i][s]: address sample s presents to LUT i
    let addresses: Vec<Vec<u8>> = connections
        .iter()
        .map(|conn| {
            encoded
                .iter()
                .map(|bits| {
                    conn.iter()
                        .enumerate()
                        .fold(0u8, |a, (i, &b)| a | (u8::from(bits[b]) << i))
                })
                .collect()
        })
        .collect();

    let entries = 1usize << k;
    let mut tables: Vec<TruthTable> = addresses
        .iter()
        .enumerate()
        .map(|(i, addr)| {
            let class = i / config.luts_per_class;
            let mut total = vec![0usize; entries];
            let mut hits = vec![0usize; entries];
            for (s, &a) in addr.iter().enumerate() {
                total[a as usize] += 1;
                if data.samples()[s].label == class {
                    hits[a as usize] += 1;
                }
            }
            // hits / total > class_count / n, without floating point
            TruthTable::from_fn(k, |a| total[a] > 0 && hits[a] * n > class_count[class] * total[a])
        })
        .collect();

    hill_climb(
        &mut tables,
        &addresses,
        data.samples(),
        config,
        options.hill_climb_budget,
    );

    Ok(DwnModel::new(ModelParts {
        config: config.clone(),
        threshold_format: ThresholdFormat::Real,
        thresholds,
        connections,
        truth_tables: tables,
        normalization: data.normalization().cloned(),
    })?)
}

/// Greedy single-bit flips. Each round applies the flip with the largest
/// strictly positive gain in correctly classified samples (ties go to the
/// lowest LUT, then lowest address). Returns the number of flips applied.
fn hill_climb(
    tables: &mut [TruthTable],
    addresses: &[Vec<u8>],
    samples: &[Sample],
    config: &ModelConfig,
    budget: usize,
) -> usize {
    let n = samples.len();
    let c = config.num_classes;
    let mut scores = vec![0u32; n * c];
    for (i, addr) in addresses.iter().enumerate() {
        let class = i / config.luts_per_class;
        for (s, &a) in addr.iter().enumerate() {
            if tables[i].get(a as usize) {
                scores[s * c + class] += 1;
            }
        }
    }
    let mut correct: Vec<bool> = (0..n)
        .map(|s| best_class(&scores[s * c..(s + 1) * c]) == samples[s].label)
        .collect();

    // buckets[i][a]: samples addressing entry a of LUT i
    let entries = 1usize << config.lut_arity;
    let buckets: Vec<Vec<Vec<u32>>> = addresses
        .iter()
        .map(|addr| {
            let mut b = vec![Vec::new(); entries];
            for (s, &a) in addr.iter().enumerate() {
                b[a as usize].push(s as u32);
            }
            b
        })
        .collect();

    let mut flips = 0;
    let mut row = vec![0u32; c];
    while flips < budget {
        let mut best: Option<(i64, usize, usize)> = None;
        for (i, lut_buckets) in buckets.iter().enumerate() {
            let class = i / config.luts_per_class;
            for (a, bucket) in lut_buckets.iter().enumerate() {
                if bucket.is_empty() {
                    continue;
                }
                let on = tables[i].get(a);
                let mut gain = 0i64;
                for &s in bucket {
                    let s = s as usize;
                    row.copy_from_slice(&scores[s * c..(s + 1) * c]);
                    if on {
                        row[class] -= 1;
                    } else {
                        row[class] += 1;
                    }
                    let now = best_class(&row) == samples[s].label;
                    gain += i64::from(now) - i64::from(correct[s]);
                }
                if gain > 0 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, i, a));
                }
            }
        }
        let Some((_, i, a)) = best else { break };
        let class = i / config.luts_per_class;
        let on = tables[i].get(a);
        tables[i] = tables[i].with_flipped(a);
        for &s in &buckets[i][a] {
            let s = s as usize;
            if on {
                scores[s * c + class] -= 1;
            } else {
                scores[s * c + class] += 1;
            }
            correct[s] = best_class(&scores[s * c..(s + 1) * c]) == samples[s].label;
        }
        flips += 1;
    }
    log::debug!("hill climbing applied {flips} flips");
    flips
}

/// A model of shape `config` with random connections and tables and
/// real-valued thresholds spread over `[-1, 1)`.
pub fn random_model(config: &ModelConfig, seed: u64) -> Result<DwnModel, TrainError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresholds = (0..config.num_features)
        .map(|_| {
            let values: Vec<f64> = (0..config.bits_per_feature.max(64) * 4)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            distributive_thresholds(&values, config.bits_per_feature)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let width = config.encoded_width();
    let k = config.lut_arity;
    let connections = (0..config.num_luts())
        .map(|_| (0..k).map(|_| rng.random_range(0..width)).collect())
        .collect();
    let mask = if k == 6 { u64::MAX } else { (1u64 << (1 << k)) - 1 };
    let truth_tables = (0..config.num_luts())
        .map(|_| TruthTable::new(k, rng.random::<u64>() & mask).expect("masked to table size"))
        .collect();
    Ok(DwnModel::new(ModelParts {
        config: config.clone(),
        threshold_format: ThresholdFormat::Real,
        thresholds,
        connections,
        truth_tables,
        normalization: None,
    })?)
}

/// Parameters of [`gaussian_blobs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    /// Standard deviation of each blob around its centre.
    pub spread: f64,
    pub seed: u64,
}

/// Isotropic Gaussian clusters with centres drawn uniformly from `[-4, 4]^F`.
/// Labels cycle through the classes, so class sizes differ by at most one.
pub fn gaussian_blobs(spec: BlobSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centres: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| (0..spec.features).map(|_| rng.random_range(-4.0..4.0)).collect())
        .collect();
    let noise = Normal::new(0.0, spec.spread).expect("spread must be finite and non-negative");
    let samples = (0..spec.samples)
        .map(|i| {
            let label = i % spec.classes;
            let features = centres[label]
                .iter()
                .map(|&m| m + noise.sample(&mut rng))
                .collect();
            Sample { features, label }
        })
        .collect();
    Dataset::new(spec.features, samples).expect("every sample has `features` values")
}

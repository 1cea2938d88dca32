#![allow(dead_code)]

use dwn_core::dataset::normalize_dataset;
use dwn_core::quantize::quantize_model;
use dwn_core::trainer::{fit_toy, gaussian_blobs, BlobSpec, FitOptions};
use dwn_core::{Dataset, DwnModel, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A preset shape with `T` capped at the capacity of `(1, n)`.
pub fn shape_at(preset: &str, frac_bits: u32) -> ModelConfig {
    let mut cfg = ModelConfig::preset(preset).unwrap();
    cfg.bits_per_feature = cfg.bits_per_feature.min(1 << (frac_bits + 1));
    cfg
}

pub fn blobs(cfg: &ModelConfig, samples: usize, seed: u64) -> Dataset {
    normalize_dataset(&gaussian_blobs(BlobSpec {
        samples,
        features: cfg.num_features,
        classes: cfg.num_classes,
        spread: 1.0,
        seed,
    }))
    .unwrap()
}

/// Toy-trained model of the preset shape, quantized to `(1, n)`.
pub fn toy_model(preset: &str, frac_bits: u32, seed: u64) -> DwnModel {
    let cfg = shape_at(preset, frac_bits);
    let data = blobs(&cfg, 300, seed);
    let model = fit_toy(&data, &cfg, FitOptions { seed, hill_climb_budget: 8 }).unwrap();
    quantize_model(&model, frac_bits).unwrap()
}

/// Random in-range mantissas, with one in four words drawn from the
/// thresholds and their neighbours so comparators see their boundaries.
pub fn random_vectors(model: &DwnModel, count: usize, seed: u64) -> Vec<Vec<i64>> {
    let fmt = model.threshold_format().fixed().unwrap();
    let thresholds = model.threshold_mantissas().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            thresholds
                .iter()
                .map(|row| {
                    if rng.random_ratio(1, 4) {
                        let t = row[rng.random_range(0..row.len())] + rng.random_range(-1..=1);
                        t.clamp(fmt.min_mantissa(), fmt.max_mantissa())
                    } else {
                        rng.random_range(fmt.min_mantissa()..=fmt.max_mantissa())
                    }
                })
                .collect()
        })
        .collect()
}

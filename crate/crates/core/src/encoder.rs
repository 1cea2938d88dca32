//! Thermometer thresholds and encoding.
//!
//! Bit `j` of a feature's code is `x >= t_j`. With ascending thresholds the
//! code is a run of ones followed by zeros, and its popcount is the number of
//! thresholds `x` has reached.

use thiserror::Error;

use crate::model::DwnModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("lower bound {lo} must be below upper bound {hi}")]
    EmptyRange { lo: f64, hi: f64 },
    #[error("at least one threshold is required")]
    NoThresholds,
    #[error("cannot place quantile thresholds on an empty value set")]
    NoValues,
    #[error("value set contains a non-finite entry")]
    NonFinite,
    #[error("sample has {found} features, model expects {expected}")]
    SampleLength { expected: usize, found: usize },
}

/// Thermometer code of one feature, bit 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThermometerCode {
    bits: Vec<bool>,
}

impl ThermometerCode {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when no `0` is followed by a `1`.
    pub fn is_contiguous(&self) -> bool {
        self.bits.windows(2).all(|w| w[0] || !w[1])
    }
}

impl std::fmt::Display for ThermometerCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `T` evenly spaced thresholds strictly inside `(lo, hi)`:
/// `t_j = lo + (j + 1)(hi - lo) / (T + 1)`.
pub fn uniform_thresholds(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, EncodeError> {
    if !(lo < hi) {
        return Err(EncodeError::EmptyRange { lo, hi });
    }
    if count == 0 {
        return Err(EncodeError::NoThresholds);
    }
    let span = hi - lo;
    let denom = (count + 1) as f64;
    Ok((0..count)
        .map(|j| lo + ((j + 1) as f64 * span) / denom)
        .collect())
}

/// Quantile of sorted `values` at probability `p`, interpolating linearly
/// between the closest order statistics (rank `p * (n - 1)`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Lifts every entry to at least the next float above its predecessor.
fn force_ascending(ts: &mut [f64]) {
    for j in 1..ts.len() {
        if ts[j] <= ts[j - 1] {
            ts[j] = ts[j - 1].next_up();
        }
    }
}

/// Distributive thresholds: the empirical quantiles of `values` at
/// probabilities `(j + 1) / (T + 1)`. Repeated quantiles are nudged upward by
/// one ulp each so the result is strictly ascending; fixed-point models get
/// the same treatment at their own resolution during quantization.
pub fn distributive_thresholds(values: &[f64], count: usize) -> Result<Vec<f64>, EncodeError> {
    if values.is_empty() {
        return Err(EncodeError::NoValues);
    }
    if count == 0 {
        return Err(EncodeError::NoThresholds);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EncodeError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let denom = (count + 1) as f64;
    let mut ts: Vec<f64> = (0..count)
        .map(|j| quantile_sorted(&sorted, (j + 1) as f64 / denom))
        .collect();
    force_ascending(&mut ts);
    Ok(ts)
}

/// Thermometer code of `x` against ascending `thresholds`.
pub fn encode_feature(x: f64, thresholds: &[f64]) -> ThermometerCode {
    ThermometerCode {
        bits: thresholds.iter().map(|&t| x >= t).collect(),
    }
}

/// Concatenated codes of all features: bit `f * T + j` is `x_f >= t_{f,j}`.
pub fn encode_sample(model: &DwnModel, sample: &[f64]) -> Result<Vec<bool>, EncodeError> {
    if sample.len() != model.num_features() {
        return Err(EncodeError::SampleLength {
            expected: model.num_features(),
            found: sample.len(),
        });
    }
    let mut bits = Vec::with_capacity(model.encoded_width());
    for (&x, row) in sample.iter().zip(model.thresholds()) {
        bits.extend(row.iter().map(|&t| x >= t));
    }
    Ok(bits)
}

/// Integer form of [`encode_sample`] for fixed-point models: compares input
/// mantissas against threshold mantissas.
pub fn encode_mantissas(thresholds: &[Vec<i64>], words: &[i64]) -> Vec<bool> {
    let mut bits = Vec::with_capacity(thresholds.iter().map(Vec::len).sum());
    for (&x, row) in words.iter().zip(thresholds) {
        bits.extend(row.iter().map(|&t| x >= t));
    }
    bits
}
